#include "pqvar/cli.hpp"

#include "pqvar/artifact.hpp"
#include "pqvar/errors.hpp"
#include "pqvar/ingest.hpp"
#include "pqvar/model.hpp"
#include "pqvar/netstats.hpp"
#include "pqvar/report.hpp"
#include "pqvar/synth.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace pqvar {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct FitConfig
{
  std::string prices;
  std::string caps;
  std::string out;
  double alpha = 0.001;
  double lower_quantile = 0.1;
  double upper_quantile = 0.9;
  double lower_breakpoint = 0.1;
  double upper_breakpoint = 0.9;
  bool no_stabilize = false;
  std::string baseline_method = "median";
  std::string net_slope_variance = "minus-cov";
  int threads = 0;
  quantreg::SolverOptions solver;
};

struct AnalyzeConfig
{
  std::string artifact;
  std::string out;
  double alpha = 0.0; // 0 keeps the artifact's level
  int grid_points = 41;
};

struct SynthConfig
{
  std::string kind = "white-noise";
  int n = 2;
  int t = 5000;
  std::uint64_t seed = 1;
  int burn_in = 500;
  std::string innovation = "normal";
  double t_df = 5.0;
  double arch = 0.15;
  double garch = 0.8;
  double skew_shift = 0.2;
  double response_slope = 0.5;
  std::string out;
};

const std::map<std::string, StandardVarMethod> kBaselineMethods{
  {"median", StandardVarMethod::kMedianQuantile},
  {"least-squares", StandardVarMethod::kLeastSquares},
};

const std::map<std::string, NetSlopeVariance> kNetSlopeRules{
  {"minus-cov", NetSlopeVariance::kMinusCovariance},
  {"sum", NetSlopeVariance::kSumRule},
};

void warn(const std::string& message)
{
  std::cerr << "pqvar: warning: " << message << '\n';
}

json fit_config_json(const FitConfig& c)
{
  return {{"alpha", c.alpha},
          {"quantiles", {c.lower_quantile, 0.5, c.upper_quantile}},
          {"breakpoints", {c.lower_breakpoint, c.upper_breakpoint}},
          {"stabilize", !c.no_stabilize},
          {"baseline_method", c.baseline_method},
          {"net_slope_variance", c.net_slope_variance},
          {"solver",
           {{"tolerance", c.solver.tolerance},
            {"max_iter", c.solver.max_iter},
            {"delta", c.solver.delta},
            {"alpha_level", c.solver.alpha_level},
            {"f0_floor", c.solver.f0_floor},
            {"max_pivots", c.solver.max_pivots}}}};
}

fs::path artifact_path(const fs::path& p)
{
  return fs::is_directory(p) ? p / "fit.json" : p;
}

void require_file(const std::string& path, const char* what)
{
  if (!fs::is_regular_file(path)) {
    throw DataError(std::string(what) + " not found: " + path);
  }
}

int cmd_fit(const FitConfig& c)
{
  require_file(c.prices, "prices file");
  require_file(c.caps, "caps file");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) {
    throw DataError("alpha must lie in (0, 1)");
  }

  std::vector<std::string> warnings;
  const PricePanel prices = load_prices(c.prices, c.caps, &warnings);
  for (const auto& w : warnings) {
    warn(w);
  }
  const ReturnPanel panel = make_return_panel(prices, !c.no_stabilize);

  PqvarOptions opts;
  opts.solver = c.solver;
  opts.lower_quantile = c.lower_quantile;
  opts.upper_quantile = c.upper_quantile;
  opts.lower_breakpoint = c.lower_breakpoint;
  opts.upper_breakpoint = c.upper_breakpoint;
  opts.net_slope_variance = kNetSlopeRules.at(c.net_slope_variance);
  opts.threads = c.threads;

  FitArtifact artifact;
  artifact.assets = panel.assets;
  artifact.alpha = c.alpha;
  artifact.pqvar = fit_pqvar(panel, opts);
  artifact.baseline = fit_standard_var(panel, kBaselineMethods.at(c.baseline_method), c.solver);
  artifact.config = fit_config_json(c);
  artifact.fingerprint = fnv1a_hex(artifact.config.dump() + file_fingerprint(c.prices) +
                                   file_fingerprint(c.caps));
  for (const auto& f : artifact.pqvar.failures) {
    warn("asset " + panel.assets[static_cast<std::size_t>(f.asset)].id +
         " masked: " + f.message);
  }
  if (artifact.pqvar.floored_variances > 0) {
    warn(std::to_string(artifact.pqvar.floored_variances) +
         " net-slope variances were negative and floored");
  }

  fs::create_directories(c.out);
  const fs::path path = fs::path(c.out) / "fit.json";
  write_artifact(path, artifact);

  // Round-trip check: the written file must parse back to the same document.
  if (to_json(read_artifact(path)) != to_json(artifact)) {
    throw DataError("artifact failed validation after writing: " + path.string());
  }
  std::cout << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_analyze(const AnalyzeConfig& c)
{
  const fs::path path = artifact_path(c.artifact);
  require_file(path.string(), "artifact");
  const FitArtifact artifact = read_artifact(path);
  const double alpha = c.alpha > 0.0 ? c.alpha : artifact.alpha;
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DataError("alpha must lie in (0, 1)");
  }

  const NetworkReport report = analyze(artifact.pqvar, artifact.baseline, artifact.assets, alpha);
  const auto written = write_report(c.out, report, artifact, c.grid_points);
  const auto problems = validate_report(c.out);
  if (!problems.empty()) {
    for (const auto& p : problems) {
      std::cerr << "pqvar: invalid output: " << p << '\n';
    }
    throw DataError("report failed schema validation");
  }
  std::cout << "wrote " << written.size() << " files to " << c.out << '\n';
  return kExitOk;
}

json truth_json(const synth::ArchetypeSpec& spec, const std::vector<Asset>& assets)
{
  auto id = [&](int k) { return assets[static_cast<std::size_t>(k)].id; };
  json coefficients = json::array();
  for (const auto& pc : synth::planted_coefficients(spec)) {
    coefficients.push_back({{"source", id(pc.source)}, {"target", id(pc.target)}, {"value", pc.value}});
  }
  json edges = json::array();
  for (const auto& e : synth::planted_edges(spec)) {
    edges.push_back({{"source", id(e.source)},
                     {"target", id(e.target)},
                     {"layer", layer_name(e.layer)},
                     {"sign", e.sign},
                     {"coefficient", e.coefficient}});
  }
  json caps = json::object();
  for (const auto& a : assets) {
    caps[a.id] = a.market_cap;
  }
  return {{"kind", synth::kind_name(spec.kind)},
          {"params",
           {{"n", spec.n},
            {"t", spec.t},
            {"seed", spec.seed},
            {"burn_in", spec.burn_in},
            {"innovation", spec.innovation == synth::Innovation::kNormal ? "normal" : "student-t"},
            {"t_df", spec.t_df},
            {"arch", spec.arch},
            {"garch", spec.garch},
            {"skew_shift", spec.skew_shift},
            {"response_slope", spec.response_slope},
            {"response_threshold", spec.response_threshold}}},
          {"planted_coefficients", coefficients},
          {"planted_edges", edges},
          {"caps", caps}};
}

int cmd_synth(const SynthConfig& c)
{
  const auto kind = synth::parse_kind(c.kind);
  if (!kind) {
    throw std::invalid_argument("unknown synth kind: " + c.kind);
  }
  if (c.t < 3) {
    throw std::invalid_argument("synth: --t must be at least 3");
  }
  synth::ArchetypeSpec spec;
  spec.kind = *kind;
  spec.n = c.n;
  // The price file has t rows, i.e. t − 1 returns.
  spec.t = c.t - 1;
  spec.seed = c.seed;
  spec.burn_in = c.burn_in;
  spec.innovation = c.innovation == "student-t" ? synth::Innovation::kStudentT
                                                : synth::Innovation::kNormal;
  spec.t_df = c.t_df;
  spec.arch = c.arch;
  spec.garch = c.garch;
  spec.skew_shift = c.skew_shift;
  spec.response_slope = c.response_slope;

  // Generated values are the modeled (stabilized) series; prices invert the transform.
  const ReturnPanel returns = synth::generate(spec);
  const PricePanel prices = synth::to_price_panel(returns, true);

  const fs::path dir(c.out);
  fs::create_directories(dir);
  write_prices_csv(dir / "prices.csv", prices);
  write_caps_csv(dir / "caps.csv", prices.assets);
  {
    std::ofstream out(dir / "truth.json");
    if (!out) {
      throw DataError("cannot write " + (dir / "truth.json").string());
    }
    out << truth_json(spec, prices.assets).dump(1) << '\n';
  }

  std::vector<std::string> warnings;
  const PricePanel check = load_prices(dir / "prices.csv", dir / "caps.csv", &warnings);
  if (!warnings.empty() || check.prices.rows() != c.t || check.prices.cols() != c.n) {
    throw DataError("synthetic panel failed validation after writing");
  }
  std::ifstream truth(dir / "truth.json");
  (void)json::parse(truth);
  std::cout << "wrote " << (dir / "prices.csv").string() << ", caps.csv, truth.json\n";
  return kExitOk;
}

} // namespace

int run_cli(int argc, char** argv)
{
  CLI::App app{"Piecewise quantile VAR causality networks"};
  app.set_config("--config", "", "TOML/INI file with option defaults; flags win");
  app.require_subcommand(1);

  FitConfig fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the nine sub-networks and the baseline VAR");
  fit_cmd->add_option("--prices", fit.prices, "CSV: timestamp,<id1>,<id2>,...")->required();
  fit_cmd->add_option("--caps", fit.caps, "CSV: id,market_cap_usd")->required();
  fit_cmd->add_option("--out", fit.out, "Output directory for fit.json")->required();
  fit_cmd->add_option("--alpha", fit.alpha, "Significance level of the link rule")
    ->capture_default_str();
  fit_cmd->add_option("--lower-quantile", fit.lower_quantile)->capture_default_str();
  fit_cmd->add_option("--upper-quantile", fit.upper_quantile)->capture_default_str();
  fit_cmd->add_option("--lower-breakpoint", fit.lower_breakpoint)->capture_default_str();
  fit_cmd->add_option("--upper-breakpoint", fit.upper_breakpoint)->capture_default_str();
  fit_cmd->add_flag("--no-stabilize", fit.no_stabilize, "Model raw percentage log-returns");
  fit_cmd->add_option("--baseline-method", fit.baseline_method)
    ->check(CLI::IsMember({"median", "least-squares"}))
    ->capture_default_str();
  fit_cmd->add_option("--net-slope-variance", fit.net_slope_variance)
    ->check(CLI::IsMember({"minus-cov", "sum"}))
    ->capture_default_str();
  fit_cmd->add_option("--threads", fit.threads, "Worker threads (0: all hardware threads)")
    ->check(CLI::NonNegativeNumber)
    ->capture_default_str();
  fit_cmd->add_option("--tolerance", fit.solver.tolerance)->capture_default_str();
  fit_cmd->add_option("--max-iter", fit.solver.max_iter)->capture_default_str();
  fit_cmd->add_option("--delta", fit.solver.delta)->capture_default_str();
  fit_cmd->add_option("--bandwidth-alpha", fit.solver.alpha_level)->capture_default_str();
  fit_cmd->add_option("--max-pivots", fit.solver.max_pivots)->capture_default_str();

  AnalyzeConfig an;
  auto* an_cmd = app.add_subcommand("analyze", "Build networks, statistics and exports");
  an_cmd->add_option("--artifact", an.artifact, "fit directory or fit.json")->required();
  an_cmd->add_option("--out", an.out, "Report directory")->required();
  an_cmd->add_option("--alpha", an.alpha, "Override the artifact's significance level");
  an_cmd->add_option("--grid-points", an.grid_points)
    ->check(CLI::Range(2, 100000))
    ->capture_default_str();

  SynthConfig sy;
  auto* sy_cmd = app.add_subcommand("synth", "Generate a synthetic panel with planted links");
  sy_cmd->add_option("--kind", sy.kind)
    ->check(CLI::IsMember({"white-noise", "linear-var", "garch-like", "skew-ar", "asymmetric"}))
    ->capture_default_str();
  sy_cmd->add_option("--n", sy.n)->check(CLI::PositiveNumber)->capture_default_str();
  sy_cmd->add_option("--t", sy.t)->capture_default_str();
  sy_cmd->add_option("--seed", sy.seed)->capture_default_str();
  sy_cmd->add_option("--burn-in", sy.burn_in)->check(CLI::NonNegativeNumber)->capture_default_str();
  sy_cmd->add_option("--innovation", sy.innovation)
    ->check(CLI::IsMember({"normal", "student-t"}))
    ->capture_default_str();
  sy_cmd->add_option("--t-df", sy.t_df)->capture_default_str();
  sy_cmd->add_option("--arch", sy.arch)->capture_default_str();
  sy_cmd->add_option("--garch", sy.garch)->capture_default_str();
  sy_cmd->add_option("--skew-shift", sy.skew_shift)->capture_default_str();
  sy_cmd->add_option("--response-slope", sy.response_slope)->capture_default_str();
  sy_cmd->add_option("--out", sy.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*fit_cmd) {
      return cmd_fit(fit);
    }
    if (*an_cmd) {
      return cmd_analyze(an);
    }
    return cmd_synth(sy);
  } catch (const DataError& e) {
    std::cerr << "pqvar: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "pqvar: numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "pqvar: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "pqvar: data error: " << e.what() << '\n';
    return kExitData;
  }
}

} // namespace pqvar
