#pragma once

// Reading observed signals from CSV, gap filling and fixed-window averaging.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hsfusion/chain_model.hpp"
#include "hsfusion/errors.hpp"

namespace hsfusion {

/// Values with NaN as the missing marker. Timestamps are strictly increasing.
struct TimedSeries {
  Vector timestamps;
  Vector values;

  std::size_t size() const noexcept { return values.size(); }

  static TimedSeries indexed(Vector values) {
    TimedSeries ts;
    ts.timestamps.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) ts.timestamps[i] = static_cast<double>(i);
    ts.values = std::move(values);
    return ts;
  }

  void validate() const {
    if (timestamps.size() != values.size()) throw DomainError("TimedSeries: length mismatch");
    for (std::size_t i = 1; i < timestamps.size(); ++i) {
      if (!(timestamps[i] > timestamps[i - 1])) {
        throw DomainError("TimedSeries: timestamps must be strictly increasing (row " +
                          std::to_string(i + 1) + ")");
      }
    }
  }

  std::size_t missing() const {
    return static_cast<std::size_t>(
        std::count_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }));
  }
};

/// Column selector: a header name, or a 1-based position.
struct ColumnSpec {
  std::string value = "1";
  std::optional<std::string> time;
  std::optional<double> sentinel;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    const auto comma = line.find(',', pos);
    out.push_back(trim(std::string_view(line).substr(pos, comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline bool is_missing_token(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower.empty() || lower == "na" || lower == "nan";
}

inline std::optional<double> parse_number(std::string_view s) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return value;
}

inline std::size_t resolve_column(const std::string& spec, const std::vector<std::string>& header) {
  if (const auto it = std::find(header.begin(), header.end(), spec); it != header.end()) {
    return static_cast<std::size_t>(it - header.begin());
  }
  std::size_t index = 0;
  const auto [ptr, ec] = std::from_chars(spec.data(), spec.data() + spec.size(), index);
  if (ec != std::errc() || ptr != spec.data() + spec.size() || index == 0) {
    throw DomainError("column '" + spec + "' not found");
  }
  return index - 1;
}

}  // namespace detail

/// Rows of trimmed string cells plus the header, if the first row has a
/// non-numeric cell.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  static CsvTable read(std::istream& in) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
      ++line_no;
      if (detail::trim(line).empty()) continue;
      auto cells = detail::split_csv_line(line);
      if (first) {
        first = false;
        const bool numeric = std::all_of(cells.begin(), cells.end(), [](const std::string& c) {
          return detail::is_missing_token(c) || detail::parse_number(c).has_value();
        });
        if (!numeric) {
          table.header = std::move(cells);
          continue;
        }
      }
      table.rows.push_back(std::move(cells));
      table.line_numbers.push_back(line_no);
    }
    return table;
  }

  static CsvTable read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read(in);
  }

  std::size_t column_index(const std::string& spec) const {
    return detail::resolve_column(spec, header);
  }

  /// Numeric column; missing tokens (and `sentinel`) become NaN.
  Vector column(std::size_t index, std::optional<double> sentinel = std::nullopt) const {
    Vector out;
    out.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (index >= rows[r].size()) {
        throw IoError("line " + std::to_string(line_numbers[r]) + ": missing column " +
                      std::to_string(index + 1));
      }
      const std::string& cell = rows[r][index];
      if (detail::is_missing_token(cell)) {
        out.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      const auto value = detail::parse_number(cell);
      if (!value) {
        throw IoError("line " + std::to_string(line_numbers[r]) + ": malformed value '" + cell + "'");
      }
      out.push_back(sentinel && *value == *sentinel ? std::numeric_limits<double>::quiet_NaN()
                                                    : *value);
    }
    return out;
  }

  Vector column(const std::string& spec) const { return column(column_index(spec)); }
};

inline TimedSeries read_signal_csv(std::istream& in, const ColumnSpec& spec) {
  const CsvTable table = CsvTable::read(in);
  if (table.rows.empty()) throw IoError("signal file has no data rows");
  TimedSeries ts;
  ts.values = table.column(table.column_index(spec.value), spec.sentinel);
  if (spec.time) {
    ts.timestamps = table.column(table.column_index(*spec.time));
    for (std::size_t i = 0; i < ts.timestamps.size(); ++i) {
      if (std::isnan(ts.timestamps[i])) {
        throw IoError("line " + std::to_string(table.line_numbers[i]) + ": missing timestamp");
      }
    }
  } else {
    ts = TimedSeries::indexed(std::move(ts.values));
  }
  if (ts.missing() == ts.size()) throw IoError("signal column is entirely missing");
  ts.validate();
  return ts;
}

inline TimedSeries read_signal_csv(const std::string& path, const ColumnSpec& spec) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open signal file '" + path + "'");
  return read_signal_csv(in, spec);
}

/// Linear interpolation in timestamp space between the nearest present
/// neighbours. Missing end values are an error unless `extend_ends`, which
/// copies the nearest present value outward.
inline TimedSeries interpolate_missing(const TimedSeries& ts, bool extend_ends = false) {
  ts.validate();
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (!std::isnan(ts.values[i])) present.push_back(i);
  if (present.empty()) throw DomainError("interpolate_missing: every value is missing");
  if (!extend_ends && (present.front() != 0 || present.back() != ts.size() - 1)) {
    throw DomainError("interpolate_missing: first or last value is missing");
  }
  TimedSeries out = ts;
  for (std::size_t i = 0; i < present.front(); ++i) out.values[i] = ts.values[present.front()];
  for (std::size_t i = present.back() + 1; i < ts.size(); ++i) out.values[i] = ts.values[present.back()];
  for (std::size_t p = 0; p + 1 < present.size(); ++p) {
    const std::size_t lo = present[p];
    const std::size_t hi = present[p + 1];
    const double t0 = ts.timestamps[lo];
    const double t1 = ts.timestamps[hi];
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double w = (ts.timestamps[i] - t0) / (t1 - t0);
      out.values[i] = ts.values[lo] + w * (ts.values[hi] - ts.values[lo]);
    }
  }
  return out;
}

enum class PartialWindow { average, reject };

/// Consecutive block means of `window` values; timestamps become the block
/// mean timestamp. A short trailing block is averaged (or rejected).
inline TimedSeries window_average(const TimedSeries& ts, std::size_t window,
                                  PartialWindow partial = PartialWindow::average) {
  if (window == 0) throw DomainError("window_average: window must be positive");
  if (ts.missing() != 0) throw DomainError("window_average: interpolate missing values first");
  if (partial == PartialWindow::reject && ts.size() % window != 0) {
    throw DomainError("window_average: length " + std::to_string(ts.size()) +
                      " is not a multiple of " + std::to_string(window));
  }
  TimedSeries out;
  for (std::size_t start = 0; start < ts.size(); start += window) {
    const std::size_t stop = std::min(ts.size(), start + window);
    double v = 0.0;
    double t = 0.0;
    for (std::size_t i = start; i < stop; ++i) {
      v += ts.values[i];
      t += ts.timestamps[i];
    }
    const auto count = static_cast<double>(stop - start);
    out.values.push_back(v / count);
    out.timestamps.push_back(t / count);
  }
  return out;
}

inline TimedSeries log_transform(const TimedSeries& ts) {
  TimedSeries out = ts;
  for (double& v : out.values) {
    if (std::isnan(v)) continue;
    if (!(v > 0.0)) throw DomainError("log_transform: values must be positive");
    v = std::log(v);
  }
  return out;
}

/// time,value CSV, shortest round-trip digits; missing values written as NA.
inline void write_series_csv(std::ostream& out, const TimedSeries& ts) {
  out << "time,value\n";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out << detail::shortest(ts.timestamps[i]) << ','
        << (std::isnan(ts.values[i]) ? std::string("NA") : detail::shortest(ts.values[i])) << '\n';
  }
}

/// index,y,post_mean,lower,upper with a 1-based index.
inline void write_estimate_csv(std::ostream& out, std::span<const double> y,
                               const PosteriorSummary& summary) {
  out << "index,y,post_mean,lower,upper\n";
  for (std::size_t i = 0; i < y.size(); ++i) {
    out << i + 1 << ',' << detail::shortest(y[i]) << ',' << detail::shortest(summary.mean[i]) << ','
        << detail::shortest(summary.lower[i]) << ',' << detail::shortest(summary.upper[i]) << '\n';
  }
}

}  // namespace hsfusion
