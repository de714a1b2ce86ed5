#include "pqvar/model.hpp"

#include "pqvar/errors.hpp"

#include <omp.h>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace pqvar {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SlopeEntry
{
  double coef;
  double variance;
  bool floored;
};

SlopeEntry net_slope_entry(double tail,
                           double linear,
                           double var_tail,
                           double var_linear,
                           double cov_tail_linear,
                           NetSlopeVariance rule,
                           double floor)
{
  const double sign = rule == NetSlopeVariance::kMinusCovariance ? -2.0 : 2.0;
  double var = var_tail + var_linear + sign * cov_tail_linear;
  bool floored = false;
  if (var < floor) {
    var = floor;
    floored = true;
  }
  return {tail + linear, var, floored};
}

double t_or_nan(double coef, double var)
{
  return var > 0.0 ? coef / std::sqrt(var) : kNaN;
}

PqvarFit allocate_fit(Eigen::Index n, const PqvarOptions& opts)
{
  PqvarFit fit;
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    fit.coef[l] = Eigen::MatrixXd::Constant(n, n, kNaN);
    fit.t_vals[l] = Eigen::MatrixXd::Constant(n, n, kNaN);
  }
  for (auto& c : fit.intercepts) {
    c = Eigen::VectorXd::Constant(n, kNaN);
  }
  fit.quantiles = {opts.lower_quantile, 0.5, opts.upper_quantile};
  return fit;
}

struct TargetOutcome
{
  std::optional<std::string> failure;
  int floored = 0;
};

// Median, lower-tail and upper-tail fits for one target asset; writes
// column j of every output matrix.
TargetOutcome fit_target(const EmbeddedDesign& design,
                         const Eigen::VectorXd& y,
                         Eigen::Index j,
                         const PqvarOptions& opts,
                         PqvarFit& out)
{
  TargetOutcome outcome;
  const Eigen::Index n = out.assets();
  const double floor = opts.solver.f0_floor * opts.solver.f0_floor;
  try {
    const auto median = quantreg::fit(design.X, y, 0.5, opts.solver);
    const Eigen::VectorXd eps = median.residuals;
    const auto lower = quantreg::fit(design.X, eps, opts.lower_quantile, opts.solver);
    const auto upper = quantreg::fit(design.X, eps, opts.upper_quantile, opts.solver);

    out.median_residuals.col(j) = eps;
    const std::array<const quantreg::QuantileFit*, 3> fits{&lower, &median, &upper};
    for (Target target : kTargets) {
      const auto& f = *fits[static_cast<std::size_t>(target)];
      out.intercepts[static_cast<std::size_t>(target)](j) = f.intercept;
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lin = embedded_column(i, Region::kLinear);
        const double a_lin = f.alpha(lin);
        const double v_lin = f.cov(lin, lin);
        const Layer lin_layer{Region::kLinear, target};
        out.coef[lin_layer.index()](i, j) = a_lin;
        out.t_vals[lin_layer.index()](i, j) = t_or_nan(a_lin, v_lin);
        for (Region tail : {Region::kLower, Region::kUpper}) {
          const Eigen::Index c = embedded_column(i, tail);
          const auto e = net_slope_entry(f.alpha(c), a_lin, f.cov(c, c), v_lin, f.cov(c, lin),
                                         opts.net_slope_variance, floor);
          const Layer layer{tail, target};
          out.coef[layer.index()](i, j) = e.coef;
          out.t_vals[layer.index()](i, j) = t_or_nan(e.coef, e.variance);
          outcome.floored += e.floored ? 1 : 0;
        }
      }
    }
  } catch (const std::exception& e) {
    for (std::size_t l = 0; l < kLayerCount; ++l) {
      out.coef[l].col(j).setConstant(kNaN);
      out.t_vals[l].col(j).setConstant(kNaN);
    }
    for (auto& c : out.intercepts) {
      c(j) = kNaN;
    }
    out.median_residuals.col(j).setConstant(kNaN);
    outcome.failure = e.what();
    outcome.floored = 0;
  }
  return outcome;
}

struct Prepared
{
  EmbeddedDesign design;
  Eigen::MatrixXd targets;
};

Prepared prepare(const ReturnPanel& panel, const PqvarOptions& opts)
{
  const Eigen::Index n = panel.returns.cols();
  const Eigen::Index rows = panel.returns.rows() - 1;
  if (n < 1 || rows <= 3 * n + 1) {
    throw DataError("insufficient sample: need more than 3N+1 = " + std::to_string(3 * n + 1) +
                    " lagged observations, have " + std::to_string(std::max<Eigen::Index>(rows, 0)));
  }
  if (!(opts.lower_quantile > 0.0 && opts.lower_quantile < 0.5 && opts.upper_quantile > 0.5 &&
        opts.upper_quantile < 1.0)) {
    throw std::invalid_argument("tail quantiles must satisfy 0 < q_low < 0.5 < q_high < 1");
  }
  const auto bp = compute_breakpoints(panel.returns, opts.lower_breakpoint, opts.upper_breakpoint);
  Prepared p{embed(lagged_inputs(panel.returns), bp), lagged_targets(panel.returns)};

  // A shared design that is rank deficient would fail every target; report
  // it once instead of masking all columns.
  Eigen::MatrixXd Z(p.design.X.rows(), p.design.X.cols() + 1);
  Z.leftCols(p.design.X.cols()) = p.design.X;
  Z.col(p.design.X.cols()).setOnes();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
  if (qr.rank() < Z.cols()) {
    std::vector<int> offending;
    std::string names;
    for (Eigen::Index k = qr.rank(); k < Z.cols(); ++k) {
      const auto c = qr.colsPermutation().indices()(k);
      if (c == p.design.X.cols()) {
        offending.push_back(-1);
        names += " intercept";
      } else {
        offending.push_back(static_cast<int>(c));
        const auto& label = p.design.labels[static_cast<std::size_t>(c)];
        names += " " + panel.assets.at(static_cast<std::size_t>(label.asset)).id + ":" +
                 std::string(region_name(label.region));
      }
    }
    throw RankDeficientError("rank-deficient embedded design; dependent columns:" + names,
                             std::move(offending));
  }
  return p;
}

PqvarFit assemble(const ReturnPanel& panel,
                  const PqvarOptions& opts,
                  const Prepared& prep,
                  bool parallel)
{
  const Eigen::Index n = panel.returns.cols();
  PqvarFit fit = allocate_fit(n, opts);
  fit.breakpoints = prep.design.breakpoints;
  fit.median_residuals = Eigen::MatrixXd::Constant(prep.targets.rows(), n, kNaN);

  std::vector<TargetOutcome> outcomes(static_cast<std::size_t>(n));
  if (parallel) {
    const int threads = opts.threads > 0 ? opts.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::VectorXd y = prep.targets.col(j);
      outcomes[static_cast<std::size_t>(j)] = fit_target(prep.design, y, j, opts, fit);
    }
  } else {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::VectorXd y = prep.targets.col(j);
      outcomes[static_cast<std::size_t>(j)] = fit_target(prep.design, y, j, opts, fit);
    }
  }

  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& o = outcomes[static_cast<std::size_t>(j)];
    fit.floored_variances += o.floored;
    if (o.failure) {
      fit.failures.push_back({static_cast<int>(j), *o.failure});
    }
  }
  return fit;
}

} // namespace

Eigen::MatrixXd PqvarFit::partial(Layer layer) const
{
  if (layer.region == Region::kLinear) {
    return coefficients(layer);
  }
  return coefficients(layer) - coefficients({Region::kLinear, layer.target});
}

NetSlope net_slope(const Eigen::MatrixXd& A_tail,
                   const Eigen::MatrixXd& A_lin,
                   std::span<const Eigen::MatrixXd> joint_cov,
                   Region tail_region,
                   NetSlopeVariance rule,
                   double variance_floor)
{
  if (tail_region == Region::kLinear) {
    throw std::invalid_argument("net_slope: tail region required");
  }
  const Eigen::Index n = A_tail.rows();
  if (A_tail.cols() != n || A_lin.rows() != n || A_lin.cols() != n ||
      static_cast<Eigen::Index>(joint_cov.size()) != n) {
    throw std::invalid_argument("net_slope: dimension mismatch");
  }
  NetSlope out;
  out.coef.resize(n, n);
  out.variance.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& cov = joint_cov[static_cast<std::size_t>(j)];
    if (cov.rows() != 3 * n + 1 || cov.cols() != 3 * n + 1) {
      throw std::invalid_argument("net_slope: joint covariance must be (3N+1)x(3N+1)");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index lin = embedded_column(i, Region::kLinear);
      const Eigen::Index c = embedded_column(i, tail_region);
      const auto e = net_slope_entry(A_tail(i, j), A_lin(i, j), cov(c, c), cov(lin, lin),
                                     cov(c, lin), rule, variance_floor);
      out.coef(i, j) = e.coef;
      out.variance(i, j) = e.variance;
      out.floored += e.floored ? 1 : 0;
    }
  }
  return out;
}

Eigen::VectorXd residual_shift(const Eigen::VectorXd& y,
                               const Eigen::MatrixXd& X,
                               const quantreg::QuantileFit& median_fit)
{
  if (X.rows() != y.size() || X.cols() != median_fit.alpha.size()) {
    throw std::invalid_argument("residual_shift: length mismatch");
  }
  Eigen::VectorXd eps = y - X * median_fit.alpha;
  eps.array() -= median_fit.intercept;
  return eps;
}

Eigen::MatrixXd lagged_inputs(const Eigen::MatrixXd& returns)
{
  return returns.topRows(returns.rows() - 1);
}

Eigen::MatrixXd lagged_targets(const Eigen::MatrixXd& returns)
{
  return returns.bottomRows(returns.rows() - 1);
}

PqvarFit fit_pqvar(const ReturnPanel& panel, const PqvarOptions& opts)
{
  return assemble(panel, opts, prepare(panel, opts), true);
}

PqvarFit fit_pqvar_serial(const ReturnPanel& panel, const PqvarOptions& opts)
{
  return assemble(panel, opts, prepare(panel, opts), false);
}

StandardVarFit fit_standard_var(const ReturnPanel& panel,
                                StandardVarMethod method,
                                const quantreg::SolverOptions& solver)
{
  const Eigen::Index n = panel.returns.cols();
  const Eigen::Index rows = panel.returns.rows() - 1;
  if (rows <= n + 1) {
    throw DataError("insufficient sample for the standard VAR: need more than N+1 lagged rows");
  }
  const Eigen::MatrixXd X = lagged_inputs(panel.returns);
  const Eigen::MatrixXd Y = lagged_targets(panel.returns);

  StandardVarFit out;
  out.method = method;
  out.Gamma = (X.transpose() * X) / static_cast<double>(rows);
  out.A = Eigen::MatrixXd::Constant(n, n, kNaN);
  out.T_vals = Eigen::MatrixXd::Constant(n, n, kNaN);
  out.intercepts = Eigen::VectorXd::Constant(n, kNaN);

  Eigen::MatrixXd Z(rows, n + 1);
  Z.leftCols(n) = X;
  Z.col(n).setOnes();

  if (method == StandardVarMethod::kLeastSquares) {
    const Eigen::MatrixXd gram = Z.transpose() * Z;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-13 * ldlt.vectorD().maxCoeff()) {
      throw NumericalError("singular Gram matrix in the standard VAR");
    }
    const Eigen::MatrixXd B = ldlt.solve(Z.transpose() * Y);
    const Eigen::MatrixXd E = Y - Z * B;
    out.Sigma_eps = (E.transpose() * E) / static_cast<double>(rows - n - 1);
    const Eigen::MatrixXd gram_inv = ldlt.solve(Eigen::MatrixXd::Identity(n + 1, n + 1));
    out.A = B.topRows(n);
    out.intercepts = B.row(n).transpose();
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        out.T_vals(i, j) = t_or_nan(out.A(i, j), gram_inv(i, i) * out.Sigma_eps(j, j));
      }
    }
    return out;
  }

  Eigen::MatrixXd E = Eigen::MatrixXd::Constant(rows, n, kNaN);
  std::vector<std::optional<std::string>> failures(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1)
  for (Eigen::Index j = 0; j < n; ++j) {
    try {
      const Eigen::VectorXd y = Y.col(j);
      const auto f = quantreg::fit(X, y, 0.5, solver);
      out.A.col(j) = f.alpha;
      out.T_vals.col(j) = f.t_values();
      out.intercepts(j) = f.intercept;
      E.col(j) = f.residuals;
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(j)] = e.what();
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (failures[static_cast<std::size_t>(j)]) {
      out.failures.push_back({static_cast<int>(j), *failures[static_cast<std::size_t>(j)]});
      E.col(j).setZero();
    }
  }
  out.Sigma_eps = (E.transpose() * E) / static_cast<double>(rows);
  return out;
}

std::array<Eigen::VectorXd, 3> predict_quantiles(const PqvarFit& fit, const Eigen::VectorXd& lagged)
{
  const Eigen::Index n = fit.assets();
  if (lagged.size() != n) {
    throw std::invalid_argument("predict_quantiles: lagged vector has wrong length");
  }
  // embedded regressors per (asset, region)
  Eigen::MatrixXd e(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto v = embed_value(lagged(i), fit.breakpoints.lower(i), fit.breakpoints.upper(i));
    e.row(i) << v[0], v[1], v[2];
  }
  auto component = [&](Target target) {
    Eigen::VectorXd out = fit.intercepts[static_cast<std::size_t>(target)];
    for (Region r : kRegions) {
      const Eigen::MatrixXd A = fit.partial({r, target});
      out += A.transpose() * e.col(static_cast<Eigen::Index>(r));
    }
    return out;
  };
  const Eigen::VectorXd median = component(Target::kMedian);
  return {median + component(Target::kLowerTail), median, median + component(Target::kUpperTail)};
}

} // namespace pqvar
