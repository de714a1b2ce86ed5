// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 if any fails.
// Every tolerance and sample size is pinned below.

#include "pqvar/artifact.hpp"
#include "pqvar/cli.hpp"
#include "pqvar/distributions.hpp"
#include "pqvar/model.hpp"
#include "pqvar/netstats.hpp"
#include "pqvar/quantreg.hpp"
#include "pqvar/report.hpp"
#include "pqvar/synth.hpp"

#include "oracles.hpp"
#include "test_helpers.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace pqvar;

namespace {

struct Outcome
{
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

synth::ArchetypeSpec archetype(synth::Kind kind, int n, int t, std::uint64_t seed)
{
  synth::ArchetypeSpec s;
  s.kind = kind;
  s.n = n;
  s.t = t;
  s.seed = seed;
  return s;
}

// 1. IRLS + refinement objective vs brute-force LP vertex enumeration.
Outcome solver_oracle()
{
  constexpr int kProblems = 200;
  constexpr double kRelTol = 1e-6;
  constexpr double kMaxSeconds = 60.0;
  const auto start = Clock::now();
  std::mt19937_64 rng(1001);
  std::normal_distribution<double> normal;
  std::student_t_distribution<double> heavy(3.0);
  double worst = 0.0;
  int failures = 0;
  for (int rep = 0; rep < kProblems; ++rep) {
    const int K = rep % 3;
    const double q = std::array{0.1, 0.5, 0.9}[static_cast<std::size_t>((rep / 3) % 3)];
    const int T = std::uniform_int_distribution<int>(K + 3, 60)(rng);
    Eigen::MatrixXd X(T, K);
    Eigen::VectorXd y(T);
    for (int t = 0; t < T; ++t) {
      for (int k = 0; k < K; ++k) {
        X(t, k) = normal(rng);
      }
      y(t) = (K > 0 ? 0.7 * X(t, 0) : 0.0) + (rep % 2 ? heavy(rng) : normal(rng));
    }
    Eigen::MatrixXd Z(T, K + 1);
    Z << X, Eigen::VectorXd::Ones(T);
    const double best = oracle::brute_force_objective(Z, y, q);
    try {
      const auto fit = quantreg::fit(X, y, q);
      const double rel = (fit.objective - best) / std::max(best, 1e-300);
      worst = std::max(worst, std::fabs(rel));
      failures += std::fabs(rel) > kRelTol;
    } catch (const std::exception&) {
      ++failures;
    }
  }
  const double secs = seconds_since(start);
  return {failures == 0 && secs < kMaxSeconds,
          std::to_string(kProblems) + " problems, max relative gap " + fmt("%.2e", worst) +
            ", " + fmt("%.1f", secs) + " s"};
}

// 2. Intercept-only coverage on 10,000 N(0,1) draws.
Outcome quantile_coverage()
{
  constexpr int kSeeds = 50;
  constexpr int kDraws = 10000;
  constexpr double kSlack = 0.02;
  constexpr double kMaxSeconds = 60.0;
  const auto start = Clock::now();
  double worst = 0.0;
  const Eigen::MatrixXd X(kDraws, 0);
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(5000 + seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd y(kDraws);
    for (auto& v : y) {
      v = normal(rng);
    }
    for (double q : {0.1, 0.5, 0.9}) {
      const auto fit = quantreg::fit(X, y, q);
      const double below = (y.array() < fit.intercept).cast<double>().mean();
      worst = std::max(worst, std::fabs(below - q));
    }
  }
  const double secs = seconds_since(start);
  return {worst <= kSlack && secs < kMaxSeconds,
          "max |below-fraction - q| " + fmt("%.4f", worst) + ", " + fmt("%.1f", secs) + " s"};
}

// 3. Cross-link false-positive rate on independent white noise.
Outcome false_positive_rate()
{
  constexpr int kReplicates = 50;
  constexpr int kN = 10;
  constexpr int kT = 2000;
  constexpr double kAlpha = 0.001;
  constexpr double kMaxRate = 0.005;
  constexpr double kMaxSeconds = 600.0;
  const auto start = Clock::now();
  long cross = 0, possible = 0, self = 0;
  for (int rep = 0; rep < kReplicates; ++rep) {
    const auto panel = synth::generate(archetype(synth::Kind::kWhiteNoise, kN, kT, 300 + rep));
    const auto layers = threshold(fit_pqvar(panel), kAlpha);
    for (const auto& l : layers) {
      const auto split = split_self_cross(l);
      cross += static_cast<long>(split.cross.size());
      self += static_cast<long>(split.self.size());
      possible += kN * (kN - 1);
    }
  }
  const double rate = static_cast<double>(cross) / possible;
  const double secs = seconds_since(start);
  return {rate <= kMaxRate && secs < kMaxSeconds,
          "pooled cross rate " + fmt("%.4f%%", 100.0 * rate) + " (" + std::to_string(cross) + "/" +
            std::to_string(possible) + "), self links " + std::to_string(self) + ", " +
            fmt("%.0f", secs) + " s"};
}

// 4. Linear VAR archetype: planted links in all three region->median layers.
Outcome linear_var_recovery()
{
  constexpr int kSeeds = 20;
  constexpr int kN = 2; // smallest panel holding the planted diagonal plus one cross effect
  constexpr int kT = 5000;
  constexpr double kAlpha = 0.001;
  constexpr double kMinSeedShare = 0.9;
  constexpr double kMaxSpurious = 0.01;
  int seeds_ok = 0;
  long spurious = 0, tail_slots = 0;
  std::array<int, 3> per_region{};
  int planted_per_region = 0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto spec = archetype(synth::Kind::kLinearVar, kN, kT, 700 + seed);
    const auto layers = threshold(fit_pqvar(synth::generate(spec)), kAlpha);
    const auto planted = synth::planted_coefficients(spec);
    bool all = true;
    for (Region r : kRegions) {
      const auto& net = layers[Layer{r, Target::kMedian}.index()];
      for (const auto& c : planted) {
        const bool hit = net.adj(c.source, c.target) == 1 && net.sign(c.source, c.target) == -1;
        per_region[static_cast<std::size_t>(r)] += hit;
        all = all && hit;
      }
    }
    planted_per_region += static_cast<int>(planted.size());
    seeds_ok += all;
    for (Region r : kRegions) {
      for (Target t : {Target::kLowerTail, Target::kUpperTail}) {
        spurious += layers[Layer{r, t}.index()].links();
        tail_slots += kN * kN;
      }
    }
  }
  const double share = static_cast<double>(seeds_ok) / kSeeds;
  const double spurious_rate = static_cast<double>(spurious) / tail_slots;
  std::ostringstream detail;
  detail << "all planted links recovered in " << seeds_ok << "/" << kSeeds
         << " seeds; per-region hit rate lower/linear/upper " << per_region[0] << "/"
         << per_region[1] << "/" << per_region[2] << " of " << planted_per_region
         << "; spurious tail-target rate " << fmt("%.4f", spurious_rate);
  return {share >= kMinSeedShare && spurious_rate <= kMaxSpurious, detail.str()};
}

// 5. GARCH archetype: matching-tail self links, no linear->median self links.
Outcome garch_recovery()
{
  constexpr int kSeeds = 20;
  constexpr int kN = 2;
  constexpr int kT = 10000;
  constexpr double kAlpha = 0.001;
  constexpr double kMinSeedShare = 0.9;
  constexpr double kMaxMedianRate = 0.05;
  int seeds_ok = 0, pairs_ok = 0, median_self = 0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto spec = archetype(synth::Kind::kGarchLike, kN, kT, 900 + seed);
    const auto layers = threshold(fit_pqvar(synth::generate(spec)), kAlpha);
    const auto& up = layers[Layer{Region::kUpper, Target::kUpperTail}.index()];
    const auto& lo = layers[Layer{Region::kLower, Target::kLowerTail}.index()];
    const auto& med = layers[Layer{Region::kLinear, Target::kMedian}.index()];
    bool all = true;
    for (int i = 0; i < kN; ++i) {
      const bool ok = up.adj(i, i) && up.sign(i, i) > 0 && lo.adj(i, i) && lo.sign(i, i) > 0;
      pairs_ok += ok;
      all = all && ok;
      median_self += med.adj(i, i);
    }
    seeds_ok += all;
  }
  const double share = static_cast<double>(seeds_ok) / kSeeds;
  const double median_rate = static_cast<double>(median_self) / (kSeeds * kN);
  std::ostringstream detail;
  detail << "both tail self links on every asset in " << seeds_ok << "/" << kSeeds
         << " seeds (" << pairs_ok << "/" << kSeeds * kN << " asset-seeds); linear->median self rate "
         << fmt("%.3f", median_rate);
  return {share >= kMinSeedShare && median_rate <= kMaxMedianRate, detail.str()};
}

// 6. Least-squares VAR vs normal equations, and planted-coefficient recovery.
Outcome standard_var()
{
  constexpr double kOracleTol = 1e-8;
  constexpr double kRecoveryTol = 0.05;
  constexpr int kT = 10000;
  const auto spec = archetype(synth::Kind::kLinearVar, 4, kT, 61);
  const auto panel = synth::generate(spec);
  const auto fit = fit_standard_var(panel, StandardVarMethod::kLeastSquares);
  const Eigen::MatrixXd B = oracle::normal_equations_var(panel.returns);
  const double oracle_err = std::max((fit.A - B.topRows(4)).cwiseAbs().maxCoeff(),
                                     (fit.intercepts - B.row(4).transpose()).cwiseAbs().maxCoeff());
  const Eigen::MatrixXd planted = synth::default_var_matrix(4);
  const double recovery_err = (fit.A - planted).cwiseAbs().maxCoeff();
  return {oracle_err <= kOracleTol && recovery_err <= kRecoveryTol,
          "max |A - normal equations| " + fmt("%.2e", oracle_err) + ", max |A - planted| " +
            fmt("%.4f", recovery_err) + " at T=10000"};
}

// 7. Net-slope variance against direct quadratic-form evaluation.
Outcome net_slope_identity()
{
  constexpr double kTol = 1e-12;
  constexpr int kN = 4;
  const auto panel = synth::generate(archetype(synth::Kind::kGarchLike, kN, 1500, 71));
  const auto bp = compute_breakpoints(panel.returns);
  const auto design = embed(lagged_inputs(panel.returns), bp);
  const Eigen::MatrixXd Y = lagged_targets(panel.returns);
  const auto fit = fit_pqvar(panel);

  double worst_default = 0.0, worst_sum = 0.0, worst_t = 0.0;
  int entries = 0;
  for (Target target : kTargets) {
    std::vector<Eigen::MatrixXd> covs;
    Eigen::MatrixXd A_lin(kN, kN);
    std::array<Eigen::MatrixXd, 2> A_tail{Eigen::MatrixXd(kN, kN), Eigen::MatrixXd(kN, kN)};
    for (Eigen::Index j = 0; j < kN; ++j) {
      const Eigen::VectorXd y = Y.col(j);
      const auto median = quantreg::fit(design.X, y, 0.5);
      const auto f = target == Target::kMedian
                       ? median
                       : quantreg::fit(design.X, median.residuals,
                                       target == Target::kLowerTail ? 0.1 : 0.9);
      covs.push_back(f.cov);
      for (Eigen::Index i = 0; i < kN; ++i) {
        A_lin(i, j) = f.alpha(embedded_column(i, Region::kLinear));
        A_tail[0](i, j) = f.alpha(embedded_column(i, Region::kLower));
        A_tail[1](i, j) = f.alpha(embedded_column(i, Region::kUpper));
      }
    }
    for (int side = 0; side < 2; ++side) {
      const Region tail = side == 0 ? Region::kLower : Region::kUpper;
      const auto paper = net_slope(A_tail[static_cast<std::size_t>(side)], A_lin, covs, tail,
                                   NetSlopeVariance::kMinusCovariance, 0.0);
      const auto sum = net_slope(A_tail[static_cast<std::size_t>(side)], A_lin, covs, tail,
                                 NetSlopeVariance::kSumRule, 0.0);
      for (Eigen::Index j = 0; j < kN; ++j) {
        for (Eigen::Index i = 0; i < kN; ++i) {
          const auto c = embedded_column(i, tail);
          const auto l = embedded_column(i, Region::kLinear);
          Eigen::Matrix2d S;
          S << covs[static_cast<std::size_t>(j)](c, c), covs[static_cast<std::size_t>(j)](c, l),
            covs[static_cast<std::size_t>(j)](l, c), covs[static_cast<std::size_t>(j)](l, l);
          const Eigen::Vector2d minus(1.0, -1.0), plus(1.0, 1.0);
          worst_default = std::max(worst_default, std::fabs(paper.variance(i, j) - minus.dot(S * minus)));
          worst_sum = std::max(worst_sum, std::fabs(sum.variance(i, j) - plus.dot(S * plus)));
          const double t = fit.t_vals[Layer{tail, target}.index()](i, j);
          const double expected_t = paper.coef(i, j) / std::sqrt(paper.variance(i, j));
          worst_t = std::max(worst_t, std::fabs(t - expected_t));
          ++entries;
        }
      }
    }
  }
  return {worst_default <= kTol && worst_sum <= kTol && worst_t <= kTol,
          std::to_string(entries) + " entries; default rule vs (1,-1) form " +
            fmt("%.1e", worst_default) + ", sum rule vs (1,1) form " + fmt("%.1e", worst_sum) +
            ", fitted t " + fmt("%.1e", worst_t)};
}

// 8. Statistics oracles on 100 random networks.
Outcome statistics_oracles()
{
  constexpr int kNetworks = 100;
  constexpr double kTol = 1e-12;
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_rho = 0.0;
  int violations = 0;
  for (int rep = 0; rep < kNetworks; ++rep) {
    const int n = std::uniform_int_distribution<int>(3, 60)(rng);
    const double density = unit(rng);
    std::bernoulli_distribution link(density);
    Eigen::MatrixXi adj(n, n);
    for (Eigen::Index k = 0; k < adj.size(); ++k) {
      adj.data()[k] = link(rng);
    }
    std::vector<double> caps(static_cast<std::size_t>(n)), x(caps.size());
    for (std::size_t k = 0; k < caps.size(); ++k) {
      caps[k] = unit(rng) * 1e9;
      x[k] = unit(rng);
    }
    worst_rho = std::max(worst_rho, std::fabs(*spearman(x, caps).rho - oracle::spearman_tie_free(x, caps)));

    violations += out_degrees(adj).sum() != adj.sum() || in_degrees(adj).sum() != adj.sum();
    for (const Eigen::VectorXi d : {out_degrees(adj), in_degrees(adj)}) {
      const std::vector<int> deg(d.data(), d.data() + d.size());
      const auto c = ccdf(deg);
      violations += c.empty() || c.front().k != 0 || c.front().survival != 1.0;
      for (std::size_t k = 1; k < c.size(); ++k) {
        violations += c[k].survival > c[k - 1].survival;
      }
    }
    const auto a = p_down(adj, caps);
    const auto b = p_down(adj.transpose(), caps);
    violations += a.has_value() != b.has_value();
    if (a && b) {
      violations += std::fabs(*a + *b - 1.0) > kTol;
    }
  }
  return {worst_rho <= kTol && violations == 0,
          "max |rho - oracle| " + fmt("%.1e", worst_rho) + ", " + std::to_string(violations) +
            " invariant violations"};
}

// 9. Critical value at alpha = 0.001.
Outcome critical_value()
{
  constexpr double kTol = 1e-4;
  const double lib = dist::two_sided_critical_value(0.001);
  const double ref = oracle::inverse_normal(0.9995);
  return {std::fabs(lib - ref) <= kTol && std::fabs(lib - 3.2905) <= kTol,
          "library " + fmt("%.6f", lib) + ", independent " + fmt("%.6f", ref)};
}

double pipeline_seconds(int n, int t, const std::filesystem::path& out)
{
  const auto panel = synth::generate(archetype(synth::Kind::kGarchLike, n, t, 1234));
  const auto start = Clock::now();
  FitArtifact a;
  a.assets = panel.assets;
  a.pqvar = fit_pqvar(panel);
  a.baseline = fit_standard_var(panel);
  write_artifact(out / "fit.json", a);
  const auto back = read_artifact(out / "fit.json");
  write_report(out / "report", analyze(back.pqvar, back.baseline, back.assets, back.alpha), back);
  return seconds_since(start);
}

// 10. Desk-scale performance and overnight projection.
Outcome performance()
{
  constexpr double kBudget = 120.0;
  constexpr double kOvernightHours = 12.0;
  testing::TempDir dir("acceptance_perf");
  const double small = pipeline_seconds(10, 5000, dir.path());
  const double full = pipeline_seconds(20, 5000, dir.path());
  // Each of the N targets costs ~ (3N+1)^k for a fixed sample length; fit k
  // from the two sizes and extrapolate to N = 260.
  const double k = std::log(full / 20.0 / (small / 10.0)) / std::log(61.0 / 31.0);
  const double projected = full / 20.0 * 260.0 * std::pow(781.0 / 61.0, k) / 3600.0;
  const int threads = omp_get_max_threads();
  return {full < kBudget && projected < kOvernightHours,
          "N=20,T=5000 fit+analyze " + fmt("%.1f", full) + " s on " + std::to_string(threads) +
            " thread(s); per-target cost exponent " + fmt("%.2f", k) + ", projected N=260 " +
            fmt("%.1f", projected) + " h"};
}

int cli(std::vector<std::string> args)
{
  args.insert(args.begin(), "pqvar");
  std::vector<char*> argv;
  for (auto& a : args) {
    argv.push_back(a.data());
  }
  std::ostringstream sink;
  auto* old = std::cout.rdbuf(sink.rdbuf());
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old);
  return rc;
}

// 11. fit + analyze twice on the same inputs: byte-identical outputs.
Outcome determinism()
{
  testing::TempDir dir("acceptance_det");
  const auto d = dir.path().string();
  if (cli({"synth", "--kind", "skew-ar", "--n", "5", "--t", "2000", "--seed", "11", "--out", d + "/in"}) != 0) {
    return {false, "synth failed"};
  }
  for (const char* run : {"1", "2"}) {
    const std::string fit = d + "/fit" + run;
    if (cli({"fit", "--prices", d + "/in/prices.csv", "--caps", d + "/in/caps.csv", "--out", fit}) != 0 ||
        cli({"analyze", "--artifact", fit, "--out", d + "/rep" + run}) != 0) {
      return {false, "pipeline failed"};
    }
  }
  int files = 1, differing = 0;
  differing += testing::read_text(dir / "fit1/fit.json") != testing::read_text(dir / "fit2/fit.json");
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir / "rep1")) {
    if (!e.is_regular_file()) {
      continue;
    }
    ++files;
    const auto rel = std::filesystem::relative(e.path(), dir / "rep1");
    differing += testing::read_text(e.path()) != testing::read_text(dir / "rep2" / rel);
  }
  return {differing == 0, std::to_string(files) + " files compared, " + std::to_string(differing) + " differ"};
}

} // namespace

int main()
{
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
    {"solver oracle equivalence", solver_oracle},
    {"quantile coverage", quantile_coverage},
    {"false-positive calibration", false_positive_rate},
    {"linear VAR archetype recovery", linear_var_recovery},
    {"GARCH archetype recovery", garch_recovery},
    {"standard VAR correctness", standard_var},
    {"net-slope variance identity", net_slope_identity},
    {"statistics oracles", statistics_oracles},
    {"critical value", critical_value},
    {"desk-scale performance", performance},
    {"end-to-end determinism", determinism},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << index << " (" << name
              << "): " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
