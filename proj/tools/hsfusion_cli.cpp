// hsfusion: command-line front end for Horseshoe fusion de-noising.
//
//   hsfusion denoise-chain --input y.csv --output est.csv
//   hsfusion denoise-graph --edges g.txt --input y.csv --roots 3 --output est.csv
//   hsfusion simulate --kind even --sigma 0.3 --family hs --reps 20 --output mc.csv
//   hsfusion threshold --estimate est.csv --truth y.csv --output report.json
//   hsfusion check-lemmas --output lemmas.json
//   hsfusion generate --type chain --kind even --sigma 0.1 --output y.csv
//   hsfusion rerun --manifest est.json --out-dir again/
//
// Exit codes: 0 ok, 2 bad configuration or disconnected graph, 3 I/O failure,
// 4 numeric failure inside the sampler.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hsfusion/hsfusion.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace hsfusion;

namespace {

constexpr int kSchemaVersion = 1;

enum ExitCode : int { kOk = 0, kBadConfig = 2, kIoFailure = 3, kSamplerFailure = 4 };

// Options whose values are file paths. Inputs are made absolute in the
// recorded command; outputs may be redirected by `rerun --out-dir`.
const std::set<std::string> kInputOptions{"--input", "--edges", "--estimate", "--truth",
                                          "--draws-in"};
const std::set<std::string> kOutputOptions{"--output", "--manifest", "--draws", "--edges-out"};

void warn(const std::string& msg) { std::cerr << "hsfusion: warning: " << msg << '\n'; }

// ---------------------------------------------------------------------------
// option groups

struct PriorArgs {
  std::string family = "hs";
  std::optional<double> family_scale;
  double t_df = 2.0;
  double a_sigma = 0.5;
  double b_sigma = 0.5;
  double lambda_first = 5.0;
  std::optional<double> fixed_tau;

  void attach(CLI::App* app, bool with_family = true) {
    if (with_family) app->add_option("--family", family, "hs, t or laplace")->capture_default_str();
    app->add_option("--family-scale", family_scale, "t / Laplace scale (default 1/(n^2 sqrt(n log n)))");
    app->add_option("--t-df", t_df, "t degrees of freedom")->capture_default_str();
    app->add_option("--a-sigma", a_sigma)->capture_default_str();
    app->add_option("--b-sigma", b_sigma)->capture_default_str();
    app->add_option("--lambda-first", lambda_first, "prior sd of the anchor value, in units of sigma")
        ->capture_default_str();
    app->add_option("--fixed-tau", fixed_tau, "hold the global scale at this value (hs only)");
  }

  PriorConfig config() const {
    PriorConfig p;
    p.family = parse_family(family);
    p.family_scale = family_scale;
    p.t_df = t_df;
    p.a_sigma = a_sigma;
    p.b_sigma = b_sigma;
    p.lambda_first = lambda_first;
    p.fixed_tau = fixed_tau;
    p.validate();
    return p;
  }
};

struct McmcArgs {
  std::size_t iter = 5000;
  std::size_t burn_in = 500;
  std::size_t thin = 1;

  void attach(CLI::App* app) {
    app->add_option("--iter", iter, "Gibbs sweeps")->capture_default_str();
    app->add_option("--burn-in", burn_in)->capture_default_str();
    app->add_option("--thin", thin)->capture_default_str();
  }

  McmcConfig config(std::uint64_t seed) const {
    McmcConfig m;
    m.n_iter = iter;
    m.burn_in = burn_in;
    m.thin = thin;
    m.seed = seed;
    m.validate();
    return m;
  }
};

struct SignalArgs {
  std::string input;
  std::string column = "1";
  std::optional<std::string> time_column;
  std::optional<double> sentinel;
  bool extend_ends = false;
  std::size_t window = 1;
  bool log = false;

  void attach(CLI::App* app) {
    app->add_option("--input", input, "signal CSV")->required();
    app->add_option("--column", column, "value column: header name or 1-based position")
        ->capture_default_str();
    app->add_option("--time-column", time_column, "timestamp column (default: row index)");
    app->add_option("--sentinel", sentinel, "value that marks a missing observation");
    app->add_flag("--extend-ends", extend_ends, "fill missing end values with the nearest present one");
    app->add_option("--window", window, "average consecutive blocks of this many values")
        ->capture_default_str();
    app->add_flag("--log", log, "analyse log values (after interpolation and averaging)");
  }
};

struct Signal {
  Vector y;
  json info;
};

// read -> interpolate -> window average -> log
Signal load_signal(const SignalArgs& a) {
  if (a.window == 0) throw DomainError("--window must be positive");
  TimedSeries ts = read_signal_csv(a.input, ColumnSpec{a.column, a.time_column, a.sentinel});
  json info{{"rows", ts.size()}, {"missing", ts.missing()}};
  if (ts.missing() > 0) ts = interpolate_missing(ts, a.extend_ends);
  if (a.window > 1) ts = window_average(ts, a.window);
  if (a.log) ts = log_transform(ts);
  info["n"] = ts.size();
  info["window"] = a.window;
  info["log"] = a.log;
  return {ts.values, info};
}

// ---------------------------------------------------------------------------
// manifest helpers

json prior_json(const PriorConfig& p, double resolved_scale) {
  json j{{"family", std::string(to_string(p.family))},
         {"a_sigma", p.a_sigma},
         {"b_sigma", p.b_sigma},
         {"lambda_first", p.lambda_first}};
  if (p.family != PriorFamily::horseshoe) {
    j["family_scale"] = resolved_scale;
    j["family_scale_source"] = p.family_scale ? "user" : "default";
  }
  if (p.family == PriorFamily::t_shrinkage) j["t_df"] = p.t_df;
  if (p.family == PriorFamily::horseshoe) {
    j["fixed_tau"] = p.fixed_tau ? json(*p.fixed_tau) : json(nullptr);
  }
  return j;
}

json mcmc_json(const McmcConfig& m) {
  return {{"n_iter", m.n_iter}, {"burn_in", m.burn_in}, {"thin", m.thin},
          {"seed", m.seed},     {"stream", m.stream},   {"kept", m.kept()}};
}

// Split-chain R-hat on sigma^2 and three theta components. Advisory only.
json convergence_json(const PosteriorSamples& s) {
  const std::size_t n = s.draws.cols();
  json j{{"advisory", true}};
  json rhat;
  rhat["sigma_sq"] = split_rhat(s.sigma_draws);
  double worst = rhat["sigma_sq"].get<double>();
  for (std::size_t c : {std::size_t{0}, n / 2, n - 1}) {
    Vector trace(s.draws.rows());
    for (std::size_t r = 0; r < trace.size(); ++r) trace[r] = s.draws(r, c);
    const double v = split_rhat(trace);
    rhat["theta_" + std::to_string(c + 1)] = v;
    worst = std::max(worst, v);
  }
  j["split_rhat"] = rhat;
  j["below_1_1"] = worst < 1.1;
  return j;
}

void report_clips(std::size_t clips) {
  if (clips > 0) {
    warn(std::to_string(clips) + " scale draw(s) clipped to [1e-12, 1e12]; see manifest");
  }
}

void require_writable(const std::string& path) {
  const fs::path parent = fs::absolute(path).parent_path();
  if (!fs::is_directory(parent)) {
    throw IoError("output directory '" + parent.string() + "' does not exist");
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

void write_json(const std::string& path, const json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

std::string default_manifest(const std::string& output) {
  return fs::path(output).replace_extension(".manifest.json").string();
}

void write_draws_csv(const std::string& path, const PosteriorSamples& s) {
  auto out = open_output(path);
  out << "sigma_sq,tau_sq";
  for (std::size_t c = 0; c < s.draws.cols(); ++c) out << ",theta_" << c + 1;
  out << '\n';
  for (std::size_t r = 0; r < s.draws.rows(); ++r) {
    out << detail::shortest(s.sigma_draws[r]) << ',' << detail::shortest(s.tau_draws[r]);
    for (double v : s.draws.row(r)) out << ',' << detail::shortest(v);
    out << '\n';
  }
}

/// Common state of one invocation: the normalised command line (for the
/// manifest) and the seed.
struct Invocation {
  std::vector<std::string> command;
  std::uint64_t seed = 20240601;
  std::string output;
  std::optional<std::string> manifest;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void attach(CLI::App* app, const char* output_help) {
    app->add_option("--seed", seed, "master seed")->capture_default_str();
    app->add_option("--output", output, output_help)->required();
    app->add_option("--manifest", manifest, "run manifest (default: <output stem>.manifest.json)");
  }

  std::string manifest_path() const { return manifest ? *manifest : default_manifest(output); }

  void check_outputs(std::initializer_list<std::optional<std::string>> extra = {}) const {
    require_writable(output);
    require_writable(manifest_path());
    for (const auto& p : extra)
      if (p) require_writable(*p);
  }

  json manifest_base(const std::string& subcommand) const {
    json outputs{{"--output", fs::absolute(output).string()}};
    return {{"schema_version", kSchemaVersion},
            {"subcommand", subcommand},
            {"command", command},
            {"seed", seed},
            {"outputs", outputs}};
  }

  void finish(json manifest) const {
    manifest["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(manifest_path(), manifest);
  }
};

// ---------------------------------------------------------------------------
// subcommands

struct DenoiseChain {
  Invocation inv;
  SignalArgs signal;
  PriorArgs prior;
  McmcArgs mcmc;
  std::optional<std::string> draws;
  double level = 0.95;

  void attach(CLI::App* app) {
    inv.attach(app, "estimate CSV: index,y,post_mean,lower,upper");
    signal.attach(app);
    prior.attach(app);
    mcmc.attach(app);
    app->add_option("--draws", draws, "also write kept draws (sigma_sq, tau_sq, theta_*)");
    app->add_option("--level", level, "credible band level")->capture_default_str();
  }

  int run() {
    const PriorConfig p = prior.config();
    const McmcConfig m = mcmc.config(inv.seed);
    if (!(level > 0.0 && level < 1.0)) throw DomainError("--level must lie in (0, 1)");
    inv.check_outputs({draws});
    const Signal sig = load_signal(signal);
    const ChainData data{sig.y, std::nullopt, std::nullopt};
    data.validate();

    const PosteriorSamples samples = run_chain(data, p, m);
    report_clips(samples.meta.clip_events);
    const PosteriorSummary summary = posterior_summary(samples, level);

    auto out = open_output(inv.output);
    write_estimate_csv(out, data.y, summary);
    out.close();
    if (draws) write_draws_csv(*draws, samples);

    json man = inv.manifest_base("denoise-chain");
    if (draws) man["outputs"]["--draws"] = fs::absolute(*draws).string();
    man["config"] = {{"prior", prior_json(p, samples.meta.family_scale)},
                     {"mcmc", mcmc_json(m)},
                     {"signal", sig.info},
                     {"level", level}};
    man["clip_events"] = samples.meta.clip_events;
    man["convergence"] = convergence_json(samples);
    inv.finish(man);
    return kOk;
  }
};

struct DenoiseGraph {
  Invocation inv;
  SignalArgs signal;
  PriorArgs prior;
  McmcArgs mcmc;
  std::string edges;
  std::size_t roots = 3;
  std::vector<std::size_t> root_ids;
  std::size_t threads = default_threads();
  std::optional<std::string> draws;
  double level = 0.95;

  void attach(CLI::App* app) {
    inv.attach(app, "pooled estimate CSV: index,y,post_mean,lower,upper");
    signal.attach(app);
    prior.attach(app);
    mcmc.attach(app);
    app->add_option("--edges", edges, "edge list, one 1-based \"i j\" pair per line")->required();
    app->add_option("--roots", roots, "number of random DFS roots")->capture_default_str();
    app->add_option("--root-ids", root_ids, "explicit 1-based roots (overrides --roots)");
    app->add_option("--threads", threads, "worker threads (results do not depend on it)");
    app->add_option("--draws", draws, "also write pooled draws");
    app->add_option("--level", level)->capture_default_str();
  }

  int run() {
    const PriorConfig p = prior.config();
    const McmcConfig m = mcmc.config(inv.seed);
    if (!(level > 0.0 && level < 1.0)) throw DomainError("--level must lie in (0, 1)");
    if (root_ids.empty() && roots == 0) throw DomainError("--roots must be positive");
    inv.check_outputs({draws});
    const Signal sig = load_signal(signal);
    const std::size_t n = sig.y.size();
    const EdgeListFile file = read_edge_list(edges, n);
    if (file.graph.n_vertices() != n) {
      throw DomainError("edge list mentions vertex " + std::to_string(file.graph.n_vertices()) +
                        " but the signal has " + std::to_string(n) + " values");
    }
    if (file.duplicates_skipped > 0) {
      warn(std::to_string(file.duplicates_skipped) + " duplicate edge(s) skipped");
    }
    std::vector<std::size_t> chosen;
    if (root_ids.empty()) {
      chosen = select_roots(n, roots, inv.seed);
    } else {
      for (std::size_t r : root_ids) {
        if (r < 1 || r > n) throw DomainError("--root-ids: vertex " + std::to_string(r) + " out of range");
        chosen.push_back(r - 1);
      }
    }

    const GraphPosterior post = run_graph_fusion(file.graph, sig.y, chosen, p, m, threads);
    report_clips(post.pooled.meta.clip_events);
    const PosteriorSummary summary = posterior_summary(post.pooled, level);

    auto out = open_output(inv.output);
    write_estimate_csv(out, sig.y, summary);
    out.close();
    if (draws) write_draws_csv(*draws, post.pooled);

    json per_root = json::array();
    for (std::size_t j = 0; j < chosen.size(); ++j) {
      const PosteriorSamples& part = post.per_root[j];
      per_root.push_back({{"root", chosen[j] + 1},
                          {"stream", part.meta.stream},
                          {"kept", part.draws.rows()},
                          {"clip_events", part.meta.clip_events},
                          {"convergence", convergence_json(part)}});
    }
    json man = inv.manifest_base("denoise-graph");
    if (draws) man["outputs"]["--draws"] = fs::absolute(*draws).string();
    man["config"] = {{"prior", prior_json(p, post.pooled.meta.family_scale)},
                     {"mcmc", mcmc_json(m)},
                     {"signal", sig.info},
                     {"graph", {{"vertices", n},
                                {"edges", file.graph.edges().size()},
                                {"duplicates_skipped", file.duplicates_skipped}}},
                     {"level", level}};
    man["roots"] = per_root;
    man["pooled_rows"] = post.pooled.draws.rows();
    man["clip_events"] = post.pooled.meta.clip_events;
    inv.finish(man);
    return kOk;
  }
};

struct Simulate {
  Invocation inv;
  PriorArgs prior;
  McmcArgs mcmc;
  std::vector<std::string> kinds{"even"};
  std::vector<double> sigmas{0.1, 0.3, 0.5};
  std::vector<std::string> families{"hs"};
  std::size_t reps = 100;
  std::size_t n = 100;
  double amplitude = 1.0;
  std::size_t threads = default_threads();

  void attach(CLI::App* app) {
    inv.attach(app, "summary CSV: kind,sigma,family,metric,mean,se");
    prior.attach(app, false);
    mcmc.attach(app);
    app->add_option("--kind", kinds, "even, uneven, very_uneven")->capture_default_str();
    app->add_option("--sigma", sigmas, "noise levels")->capture_default_str();
    app->add_option("--family", families, "prior families to compare")->capture_default_str();
    app->add_option("--reps", reps, "replications per scenario")->capture_default_str();
    app->add_option("--n", n, "signal length")->capture_default_str();
    app->add_option("--amplitude", amplitude, "level step between blocks")->capture_default_str();
    app->add_option("--threads", threads, "worker threads (results do not depend on it)");
  }

  int run() {
    MonteCarloConfig cfg;
    cfg.kinds.clear();
    for (const auto& k : kinds) cfg.kinds.push_back(parse_kind(k));
    cfg.sigmas = sigmas;
    cfg.families.clear();
    for (const auto& f : families) cfg.families.push_back(parse_family(f));
    cfg.reps = reps;
    cfg.n = n;
    cfg.amplitude = amplitude;
    cfg.prior = prior.config();
    cfg.mcmc = mcmc.config(inv.seed);
    cfg.threads = threads;
    cfg.validate();
    inv.check_outputs();

    const auto rows = summarize(monte_carlo(cfg));
    auto out = open_output(inv.output);
    write_summary_csv(out, rows);
    out.close();

    json fams = json::array();
    for (PriorFamily f : cfg.families) {
      PriorConfig p = cfg.prior;
      p.family = f;
      fams.push_back(prior_json(p, resolved_family_scale(p, n)));
    }
    json man = inv.manifest_base("simulate");
    man["config"] = {{"kinds", kinds}, {"sigmas", sigmas},       {"priors", fams},
                     {"reps", reps},   {"n", n},                 {"amplitude", amplitude},
                     {"mcmc", mcmc_json(cfg.mcmc)}};
    inv.finish(man);
    return kOk;
  }
};

struct Threshold {
  Invocation inv;
  std::string estimate;
  std::optional<std::string> truth;
  std::string truth_column = "truth";
  std::optional<std::string> draws_in;
  std::optional<std::size_t> s0;
  double constant = 1.0;
  std::string sigma_mode = "per-draw";

  void attach(CLI::App* app) {
    inv.attach(app, "JSON block report");
    app->add_option("--estimate", estimate, "estimate CSV with y and post_mean columns")->required();
    app->add_option("--truth", truth, "CSV holding the true signal");
    app->add_option("--truth-column", truth_column)->capture_default_str();
    app->add_option("--draws-in", draws_in, "draws CSV written by --draws");
    app->add_option("--s0", s0, "number of true change points, for per-draw false positives");
    app->add_option("--threshold-constant", constant, "multiplier of sqrt(s0 log n / n) / n")
        ->capture_default_str();
    app->add_option("--sigma-mode", sigma_mode, "per-draw or posterior-mean")->capture_default_str();
  }

  int run() {
    if (s0 && !draws_in) throw DomainError("--s0 needs --draws-in");
    if (s0 && !truth) throw DomainError("--s0 needs --truth");
    if (s0 && *s0 == 0) throw DomainError("--s0 must be at least 1");
    if (sigma_mode != "per-draw" && sigma_mode != "posterior-mean") {
      throw DomainError("--sigma-mode must be per-draw or posterior-mean");
    }
    detail::require_positive(constant, "--threshold-constant");
    inv.check_outputs();

    const CsvTable est = CsvTable::read(estimate);
    const Vector y = est.column("y");
    const Vector theta = est.column("post_mean");
    const PairwiseBlocks pairs = practical_threshold(theta, y);
    std::size_t adjacent = 0;
    for (std::size_t i = 1; i < y.size(); ++i) adjacent += pairs.fused(i - 1, i);

    json report{{"n", y.size()},
                {"pairs", y.size() * (y.size() - 1) / 2},
                {"fused_pairs", pairs.fused_pairs()},
                {"adjacent_fused", adjacent},
                {"blocks", y.size() - adjacent}};
    if (truth) {
      const Vector t = CsvTable::read(*truth).column(truth_column);
      const WbMetrics wb = wb_metrics(theta, t);
      report["W"] = wb.within;
      report["B"] = std::isinf(wb.between) ? json(nullptr) : json(wb.between);
      if (s0) {
        const PosteriorSamples samples = read_draws(*draws_in, y.size());
        const auto counts = false_positive_counts(
            samples, t, *s0,
            sigma_mode == "per-draw" ? SigmaMode::per_draw : SigmaMode::posterior_mean, constant);
        std::size_t within = 0;
        for (std::size_t c : counts) within += c <= 2 * *s0;
        report["false_positives"] = {
            {"s0", *s0},
            {"threshold", contraction_threshold(y.size(), *s0, constant)},
            {"sigma_mode", sigma_mode},
            {"draws", counts.size()},
            {"max", *std::max_element(counts.begin(), counts.end())},
            {"share_within_2s0", static_cast<double>(within) / static_cast<double>(counts.size())},
            {"per_draw", counts}};
      }
    }
    write_json(inv.output, report);

    json man = inv.manifest_base("threshold");
    man["config"] = {{"threshold_constant", constant}, {"sigma_mode", sigma_mode}};
    if (s0) man["config"]["s0"] = *s0;
    inv.finish(man);
    return kOk;
  }

  static PosteriorSamples read_draws(const std::string& path, std::size_t n) {
    const CsvTable t = CsvTable::read(path);
    if (t.header.size() != n + 2) {
      throw DomainError("draws file has " + std::to_string(t.header.size()) + " columns, expected " +
                        std::to_string(n + 2));
    }
    PosteriorSamples s;
    s.sigma_draws = t.column(0);
    s.tau_draws = t.column(1);
    std::vector<Vector> cols;
    for (std::size_t c = 0; c < n; ++c) cols.push_back(t.column(c + 2));
    s.draws = DrawMatrix(s.sigma_draws.size(), n);
    for (std::size_t r = 0; r < s.sigma_draws.size(); ++r)
      for (std::size_t c = 0; c < n; ++c) s.draws(r, c) = cols[c][r];
    return s;
  }
};

struct CheckLemmas {
  Invocation inv;
  std::vector<std::size_t> ns{50, 100, 500};
  std::vector<double> bs{0.5};
  std::vector<double> b_primes{0.4};
  std::size_t s0 = 3;
  std::optional<double> tau_power;
  std::vector<std::size_t> thickness_ns{100, 1000, 10000};

  void attach(CLI::App* app) {
    inv.attach(app, "JSON report");
    app->add_option("--n", ns, "sample sizes for the prior-mass check")->capture_default_str();
    app->add_option("--b", bs)->capture_default_str();
    app->add_option("--b-prime", b_primes)->capture_default_str();
    app->add_option("--s0", s0)->capture_default_str();
    app->add_option("--tau-power", tau_power, "use tau = n^-p instead of n^-(2+b)");
    app->add_option("--thickness-n", thickness_ns, "sample sizes for the thickness check")
        ->capture_default_str();
  }

  int run() {
    if (s0 == 0) throw DomainError("--s0 must be positive");
    for (std::size_t n : ns)
      if (n < 2) throw DomainError("--n values must be at least 2");
    for (std::size_t n : thickness_ns)
      if (n < 2) throw DomainError("--thickness-n values must be at least 2");
    inv.check_outputs();

    json mass = json::array();
    bool mass_ok = true;
    for (std::size_t n : ns) {
      const double nn = static_cast<double>(n);
      for (double b : bs)
        for (double bp : b_primes) {
          const double tau = std::pow(nn, -(tau_power ? *tau_power : 2.0 + b));
          const double a_n = static_cast<double>(s0) * std::log(nn) / (nn * nn);
          const double bound = prior_mass_outside(a_n, tau);
          const double limit = std::pow(nn, -bp);
          const bool pass = bound <= limit;
          mass_ok = mass_ok && pass;
          mass.push_back({{"n", n},         {"b", b},         {"b_prime", bp},
                          {"tau", tau},     {"a_n", a_n},     {"bound", bound},
                          {"limit", limit}, {"pass", pass},   {"tau_assumption_holds", tau <= 1.0 / (nn * nn)}});
        }
    }

    json thick = json::array();
    bool thick_ok = true;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t n : thickness_ns) {
      const double nn = static_cast<double>(n);
      const double value = hs_thickness(nn, std::pow(nn, -3.0), 1.0);
      const double ratio = value / std::log(nn);
      thick_ok = thick_ok && ratio <= 10.0;
      thick.push_back({{"n", n}, {"L", nn}, {"tau", std::pow(nn, -3.0)}, {"value", value}, {"ratio_to_log_n", ratio}});
      const double x = std::log(nn);
      sx += x;
      sy += value;
      sxx += x * x;
      sxy += x * value;
    }
    const double k = static_cast<double>(thickness_ns.size());
    const double slope = k > 1 ? (k * sxy - sx * sy) / (k * sxx - sx * sx) : std::nan("");

    const json report{{"prior_mass", mass},
                      {"prior_mass_pass", mass_ok},
                      {"thickness", thick},
                      {"thickness_slope_on_log_n", std::isfinite(slope) ? json(slope) : json(nullptr)},
                      {"thickness_pass", thick_ok},
                      {"all_pass", mass_ok && thick_ok}};
    write_json(inv.output, report);

    json man = inv.manifest_base("check-lemmas");
    man["config"] = {{"n", ns}, {"b", bs}, {"b_prime", b_primes}, {"s0", s0},
                     {"tau_power", tau_power ? json(*tau_power) : json(nullptr)},
                     {"thickness_n", thickness_ns}};
    inv.finish(man);
    return kOk;
  }
};

struct Generate {
  Invocation inv;
  std::string type = "chain";
  std::string kind = "even";
  std::size_t n = 100;
  double sigma = 0.3;
  double amplitude = 1.0;
  std::optional<std::string> edges_out;
  std::size_t communities = 25;
  std::size_t min_size = 11;
  std::size_t max_size = 82;

  void attach(CLI::App* app) {
    inv.attach(app, "signal CSV: y,truth[,community]");
    app->add_option("--type", type, "chain, path (chain plus its edge list) or community")
        ->capture_default_str();
    app->add_option("--kind", kind, "block layout for chain/path")->capture_default_str();
    app->add_option("--n", n, "signal length for chain/path")->capture_default_str();
    app->add_option("--sigma", sigma, "noise sd")->capture_default_str();
    app->add_option("--amplitude", amplitude)->capture_default_str();
    app->add_option("--edges-out", edges_out, "edge list output (path, community)");
    app->add_option("--communities", communities)->capture_default_str();
    app->add_option("--min-size", min_size)->capture_default_str();
    app->add_option("--max-size", max_size)->capture_default_str();
  }

  int run() {
    if (type != "chain" && type != "path" && type != "community") {
      throw DomainError("--type must be chain, path or community");
    }
    if (type != "chain" && !edges_out) throw DomainError("--type " + type + " needs --edges-out");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("--sigma must be >= 0");
    inv.check_outputs({edges_out});

    Vector truth;
    std::optional<PlantedGraph> planted;
    UGraph graph;
    if (type == "community") {
      CommunityGraphConfig cfg;
      cfg.communities = communities;
      cfg.min_size = min_size;
      cfg.max_size = max_size;
      cfg.seed = inv.seed;
      planted = make_community_graph(cfg);
      truth = planted->truth;
      graph = planted->graph;
    } else {
      SignalSpec spec;
      spec.kind = parse_kind(kind);
      spec.n = n;
      spec.amplitude = amplitude;
      detail::require_positive(amplitude, "--amplitude");
      truth = make_signal(spec);
      if (type == "path") graph = UGraph::path(n);
    }
    const Vector y = add_noise(truth, sigma, inv.seed);

    auto out = open_output(inv.output);
    out << (planted ? "y,truth,community\n" : "y,truth\n");
    for (std::size_t i = 0; i < y.size(); ++i) {
      out << detail::shortest(y[i]) << ',' << detail::shortest(truth[i]);
      if (planted) out << ',' << planted->community[i];
      out << '\n';
    }
    out.close();
    if (edges_out) {
      auto eo = open_output(*edges_out);
      write_edge_list(eo, graph);
    }

    json man = inv.manifest_base("generate");
    if (edges_out) man["outputs"]["--edges-out"] = fs::absolute(*edges_out).string();
    man["config"] = {{"type", type}, {"sigma", sigma}, {"n", y.size()}};
    if (type == "community") {
      man["config"]["communities"] = communities;
      man["config"]["edges"] = graph.edges().size();
    } else {
      man["config"]["kind"] = kind;
      man["config"]["amplitude"] = amplitude;
    }
    inv.finish(man);
    return kOk;
  }
};

// ---------------------------------------------------------------------------
// command-line normalisation and replay

// Splits --opt=value and makes input paths absolute.
std::vector<std::string> normalise(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (const auto& a : args) {
    const auto eq = a.find('=');
    if (a.rfind("--", 0) == 0 && eq != std::string::npos) {
      out.push_back(a.substr(0, eq));
      out.push_back(a.substr(eq + 1));
    } else {
      out.push_back(a);
    }
  }
  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    if (kInputOptions.count(out[i]) || kOutputOptions.count(out[i])) {
      out[i + 1] = fs::absolute(out[i + 1]).lexically_normal().string();
    }
  }
  return out;
}

int dispatch(std::vector<std::string> args);

int rerun(const std::string& manifest_path, const std::optional<std::string>& out_dir) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest '" + manifest_path + "'");
  json man;
  try {
    man = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("manifest '" + manifest_path + "' is not valid JSON: " + e.what());
  }
  if (!man.contains("schema_version") || man["schema_version"] != kSchemaVersion) {
    throw DomainError("manifest schema_version is missing or unsupported");
  }
  auto command = man.at("command").get<std::vector<std::string>>();
  if (out_dir) {
    if (!fs::is_directory(*out_dir)) throw IoError("--out-dir '" + *out_dir + "' does not exist");
    bool has_manifest = false;
    for (std::size_t i = 0; i + 1 < command.size(); ++i) {
      if (kOutputOptions.count(command[i])) {
        command[i + 1] = (fs::path(*out_dir) / fs::path(command[i + 1]).filename()).string();
        has_manifest = has_manifest || command[i] == "--manifest";
      }
    }
    if (!has_manifest) {
      const std::string original = man.at("outputs").at("--output").get<std::string>();
      command.push_back("--manifest");
      command.push_back((fs::path(*out_dir) / fs::path(default_manifest(original)).filename()).string());
    }
  }
  return dispatch(command);
}

int dispatch(std::vector<std::string> args) {
  CLI::App app{"Horseshoe fusion de-noising of sequences and graph signals", "hsfusion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hsfusion 1.0");

  DenoiseChain chain;
  DenoiseGraph graph;
  Simulate sim;
  Threshold thr;
  CheckLemmas lemmas;
  Generate gen;
  std::string manifest;
  std::optional<std::string> out_dir;

  auto* c1 = app.add_subcommand("denoise-chain", "posterior mean and bands for a 1-D signal");
  chain.attach(c1);
  auto* c2 = app.add_subcommand("denoise-graph", "de-noise a signal on the vertices of a graph");
  graph.attach(c2);
  auto* c3 = app.add_subcommand("simulate", "Monte-Carlo study over signal designs and priors");
  sim.attach(c3);
  auto* c4 = app.add_subcommand("threshold", "block recovery report for an estimate");
  thr.attach(c4);
  auto* c5 = app.add_subcommand("check-lemmas", "prior-mass and thickness bound checks");
  lemmas.attach(c5);
  auto* c6 = app.add_subcommand("generate", "write a synthetic signal (and graph)");
  gen.attach(c6);
  auto* c7 = app.add_subcommand("rerun", "repeat a run from its manifest");
  c7->add_option("--manifest", manifest, "manifest written by an earlier run")->required();
  c7->add_option("--out-dir", out_dir, "write outputs here instead of the original paths");

  args = normalise(args);
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadConfig;
  }

  const auto record = [&](Invocation& inv) {
    inv.command = args;
    if (std::find(args.begin(), args.end(), "--seed") == args.end()) {
      inv.command.push_back("--seed");
      inv.command.push_back(std::to_string(inv.seed));
    }
  };
  if (c1->parsed()) {
    record(chain.inv);
    return chain.run();
  }
  if (c2->parsed()) {
    record(graph.inv);
    return graph.run();
  }
  if (c3->parsed()) {
    record(sim.inv);
    return sim.run();
  }
  if (c4->parsed()) {
    record(thr.inv);
    return thr.run();
  }
  if (c5->parsed()) {
    record(lemmas.inv);
    return lemmas.run();
  }
  if (c6->parsed()) {
    record(gen.inv);
    return gen.run();
  }
  return rerun(manifest, out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const GraphError& e) {
    std::cerr << "hsfusion: error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const DomainError& e) {
    std::cerr << "hsfusion: error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const IoError& e) {
    std::cerr << "hsfusion: error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const SamplerError& e) {
    std::cerr << "hsfusion: sampler failure: " << e.what() << '\n';
    return kSamplerFailure;
  } catch (const std::exception& e) {
    std::cerr << "hsfusion: error: " << e.what() << '\n';
    return kIoFailure;
  }
}
