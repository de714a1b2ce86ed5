#include "pqvar/quantreg.hpp"

#include "pqvar/distributions.hpp"
#include "pqvar/errors.hpp"
#include "pqvar/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace pqvar::quantreg {

namespace {

void check_quantile(double q)
{
  if (!(q > 0.0 && q < 1.0)) {
    throw std::invalid_argument("quantile must lie in (0, 1)");
  }
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X)
{
  Eigen::MatrixXd Z(X.rows(), X.cols() + 1);
  Z.leftCols(X.cols()) = X;
  Z.col(X.cols()).setOnes();
  return Z;
}

void check_rank(const Eigen::MatrixXd& Z)
{
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
  const auto rank = qr.rank();
  if (rank == Z.cols()) {
    return;
  }
  const Eigen::Index intercept = Z.cols() - 1;
  std::vector<int> offending;
  for (Eigen::Index k = rank; k < Z.cols(); ++k) {
    const auto c = qr.colsPermutation().indices()(k);
    offending.push_back(c == intercept ? -1 : static_cast<int>(c));
  }
  std::sort(offending.begin(), offending.end());
  std::ostringstream msg;
  msg << "rank-deficient design (rank " << rank << " of " << Z.cols()
      << "); dependent columns:";
  for (int c : offending) {
    msg << ' ' << (c < 0 ? std::string("intercept") : std::to_string(c));
  }
  throw RankDeficientError(msg.str(), std::move(offending));
}

Eigen::VectorXd irls(const Eigen::MatrixXd& Z,
                     const Eigen::VectorXd& y,
                     double q,
                     const SolverOptions& opts,
                     int& iterations)
{
  const Eigen::Index p = Z.cols();
  Eigen::MatrixXd gram(p, p);
  gram.setZero();
  gram.selfadjointView<Eigen::Lower>().rankUpdate(Z.transpose());
  Eigen::VectorXd beta = gram.selfadjointView<Eigen::Lower>().ldlt().solve(Z.transpose() * y);

  Eigen::VectorXd w(Z.rows());
  Eigen::MatrixXd Zw(Z.rows(), p);
  iterations = 0;
  for (int it = 0; it < opts.max_iter; ++it) {
    ++iterations;
    const Eigen::VectorXd r = y - Z * beta;
    for (Eigen::Index t = 0; t < r.size(); ++t) {
      w(t) = (r(t) > 0.0 ? q : 1.0 - q) / std::max(std::fabs(r(t)), opts.delta);
    }
    Zw = Z.array().colwise() * w.array().sqrt();
    gram.setZero();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(Zw.transpose());
    const Eigen::VectorXd rhs = Z.transpose() * w.cwiseProduct(y);
    Eigen::VectorXd next = gram.selfadjointView<Eigen::Lower>().ldlt().solve(rhs);
    if (!next.allFinite()) {
      break;
    }
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = std::move(next);
    if (change < opts.tolerance) {
      break;
    }
  }
  return beta;
}

// Picks p linearly independent rows of Z, preferring small |residual|.
std::vector<Eigen::Index> initial_basis(const Eigen::MatrixXd& Z, const Eigen::VectorXd& r)
{
  const Eigen::Index T = Z.rows();
  const Eigen::Index p = Z.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(T));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::fabs(r(a)) < std::fabs(r(b));
  });

  std::vector<Eigen::Index> basis;
  Eigen::MatrixXd ortho(p, p); // orthonormal rows spanning the chosen rows
  Eigen::Index found = 0;
  for (Eigen::Index t : order) {
    Eigen::VectorXd v = Z.row(t).transpose();
    const double norm0 = v.norm();
    if (norm0 == 0.0) {
      continue;
    }
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index k = 0; k < found; ++k) {
        v -= ortho.row(k).dot(v) * ortho.row(k).transpose();
      }
    }
    const double norm = v.norm();
    if (norm <= 1e-9 * norm0) {
      continue;
    }
    ortho.row(found++) = v.transpose() / norm;
    basis.push_back(t);
    if (found == p) {
      break;
    }
  }
  return basis;
}

// Drives a warm start to an optimal vertex of the pinball-loss LP. At a
// vertex the p basic observations have zero residual; moving along the
// direction that frees basic observation k changes the objective at rate
// −s·(B′u)_k + (s>0 ? 1−q : q), where B = Z_H⁻¹ and u = Σ_{t∉H} ρ′(ε_t)·z_t.
Eigen::VectorXd refine_vertex(const Eigen::MatrixXd& Z,
                              const Eigen::VectorXd& y,
                              double q,
                              const Eigen::VectorXd& warm,
                              const SolverOptions& opts,
                              int& pivots)
{
  const Eigen::Index T = Z.rows();
  const Eigen::Index p = Z.cols();
  pivots = 0;

  Eigen::VectorXd r = y - Z * warm;
  std::vector<Eigen::Index> basis = initial_basis(Z, r);
  if (static_cast<Eigen::Index>(basis.size()) < p) {
    throw NumericalError("could not find a nonsingular basis");
  }

  const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
  const double zero_tol = 1e-12 * scale;

  std::vector<char> in_basis(static_cast<std::size_t>(T), 0);
  Eigen::MatrixXd ZH(p, p);
  Eigen::VectorXd yH(p);
  Eigen::VectorXd beta(p);
  Eigen::VectorXd a(T);
  Eigen::VectorXd gz(T);
  std::vector<Eigen::Index> degenerate;
  struct Breakpoint
  {
    double lambda;
    double weight;
    Eigen::Index t;
  };
  std::vector<Breakpoint> breaks;
  breaks.reserve(static_cast<std::size_t>(T));

  double last_gap = 0.0;
  while (true) {
    for (Eigen::Index k = 0; k < p; ++k) {
      ZH.row(k) = Z.row(basis[static_cast<std::size_t>(k)]);
      yH(k) = y(basis[static_cast<std::size_t>(k)]);
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(ZH);
    beta = lu.solve(yH);
    const Eigen::MatrixXd Binv = lu.inverse();

    std::fill(in_basis.begin(), in_basis.end(), 0);
    for (auto t : basis) {
      in_basis[static_cast<std::size_t>(t)] = 1;
    }
    r = y - Z * beta;
    degenerate.clear();
    for (Eigen::Index t = 0; t < T; ++t) {
      if (in_basis[static_cast<std::size_t>(t)]) {
        r(t) = 0.0;
        a(t) = 0.0;
      } else if (std::fabs(r(t)) <= zero_tol) {
        a(t) = 0.0;
        degenerate.push_back(t);
      } else {
        a(t) = r(t) > 0.0 ? q : q - 1.0;
      }
    }
    const Eigen::VectorXd u = Z.transpose() * a;
    const Eigen::VectorXd w = Binv.transpose() * u;
    Eigen::MatrixXd VD;
    if (!degenerate.empty()) {
      VD.resize(static_cast<Eigen::Index>(degenerate.size()), p);
      for (std::size_t i = 0; i < degenerate.size(); ++i) {
        VD.row(static_cast<Eigen::Index>(i)) = Z.row(degenerate[i]) * Binv;
      }
    }

    double best = 0.0;
    Eigen::Index best_k = -1;
    double best_s = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) {
      for (double s : {1.0, -1.0}) {
        double g = -s * w(k) + (s > 0.0 ? 1.0 - q : q);
        for (Eigen::Index i = 0; i < VD.rows(); ++i) {
          const double dr = -s * VD(i, k);
          g += std::max(q * dr, (q - 1.0) * dr);
        }
        const double tol = 1e-10 * (1.0 + std::fabs(w(k)));
        if (g < -tol && g < best) {
          best = g;
          best_k = k;
          best_s = s;
        }
      }
    }
    last_gap = best;
    if (best_k < 0) {
      return beta;
    }
    if (pivots >= opts.max_pivots) {
      throw ConvergenceError("quantile regression did not reach an optimal vertex after " +
                               std::to_string(pivots) + " pivots",
                             last_gap);
    }

    const Eigen::VectorXd d = best_s * Binv.col(best_k);
    gz.noalias() = Z * d;
    breaks.clear();
    for (Eigen::Index t = 0; t < T; ++t) {
      if (in_basis[static_cast<std::size_t>(t)] || a(t) == 0.0 || gz(t) == 0.0) {
        continue;
      }
      const double lambda = r(t) / gz(t);
      if (lambda > 0.0) {
        breaks.push_back({lambda, std::fabs(gz(t)), t});
      }
    }
    std::sort(breaks.begin(), breaks.end(), [](const Breakpoint& x, const Breakpoint& y2) {
      return x.lambda < y2.lambda || (x.lambda == y2.lambda && x.t < y2.t);
    });
    double slope = best;
    Eigen::Index entering = -1;
    for (const auto& b : breaks) {
      slope += b.weight;
      if (slope >= 0.0) {
        entering = b.t;
        break;
      }
    }
    if (entering < 0) {
      throw ConvergenceError("pinball objective appears unbounded along a descent edge", best);
    }
    basis[static_cast<std::size_t>(best_k)] = entering;
    ++pivots;
  }
}

} // namespace

Eigen::VectorXd QuantileFit::t_values() const
{
  Eigen::VectorXd t(alpha.size());
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    const double var = cov(k, k);
    t(k) = var > 0.0 ? alpha(k) / std::sqrt(var) : std::numeric_limits<double>::quiet_NaN();
  }
  return t;
}

double pinball_loss(double y, double y_hat, double q)
{
  check_quantile(q);
  return y_hat <= y ? (y - y_hat) * q : (y_hat - y) * (1.0 - q);
}

double total_pinball_loss(const Eigen::VectorXd& residuals, double q)
{
  check_quantile(q);
  double total = 0.0;
  for (Eigen::Index t = 0; t < residuals.size(); ++t) {
    const double e = residuals(t);
    total += e >= 0.0 ? e * q : -e * (1.0 - q);
  }
  return total;
}

Eigen::VectorXd solve(const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& y,
                      double q,
                      const SolverOptions& opts,
                      int* irls_iterations,
                      int* pivots)
{
  check_quantile(q);
  if (X.rows() != y.size()) {
    throw std::invalid_argument("design and response lengths differ");
  }
  if (X.rows() <= X.cols()) {
    throw DataError("quantile regression needs more observations than covariates");
  }
  if (!X.allFinite() || !y.allFinite()) {
    throw DataError("non-finite values in quantile regression input");
  }
  const Eigen::MatrixXd Z = with_intercept(X);
  check_rank(Z);

  int iters = 0;
  const Eigen::VectorXd warm = irls(Z, y, q, opts, iters);
  int piv = 0;
  Eigen::VectorXd beta = refine_vertex(Z, y, q, warm, opts, piv);
  if (total_pinball_loss(y - Z * warm, q) < total_pinball_loss(y - Z * beta, q)) {
    beta = warm;
  }
  if (irls_iterations) {
    *irls_iterations = iters;
  }
  if (pivots) {
    *pivots = piv;
  }
  return beta;
}

QuantileFit fit(const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y,
                double q,
                const SolverOptions& opts)
{
  QuantileFit out;
  out.q = q;
  const Eigen::VectorXd beta = solve(X, y, q, opts, &out.irls_iterations, &out.pivots);
  const Eigen::Index K = X.cols();
  out.alpha = beta.head(K);
  out.intercept = beta(K);
  out.residuals = y - X * out.alpha;
  out.residuals.array() -= out.intercept;
  // Observations interpolated by the solution carry only round-off; make
  // them exact zeros so their sandwich weight does not depend on its sign.
  const Eigen::ArrayXd magnitude =
    y.array().abs() + (X.array().rowwise() * out.alpha.transpose().array()).abs().rowwise().sum() +
    std::fabs(out.intercept);
  const double eps = std::numeric_limits<double>::epsilon();
  for (Eigen::Index t = 0; t < out.residuals.size(); ++t) {
    if (std::fabs(out.residuals(t)) <= 64.0 * eps * magnitude(t)) {
      out.residuals(t) = 0.0;
    }
  }
  out.objective = total_pinball_loss(out.residuals, q);

  const double h_q = hall_sheather_bandwidth(static_cast<double>(y.size()), q, opts.alpha_level);
  out.bandwidth = residual_scale_bandwidth(h_q, q, y, out.residuals);
  out.f0 = kde_density_at_zero(out.residuals, out.bandwidth, opts.f0_floor);
  out.cov = estimate_covariance(X, out.residuals, q, out.f0);
  return out;
}

Eigen::MatrixXd estimate_covariance(const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& residuals,
                                    double q,
                                    double f0)
{
  check_quantile(q);
  if (!(f0 > 0.0)) {
    throw std::invalid_argument("f0 must be positive");
  }
  if (X.rows() != residuals.size()) {
    throw std::invalid_argument("design and residual lengths differ");
  }
  const Eigen::MatrixXd Z = with_intercept(X);
  const Eigen::Index p = Z.cols();

  Eigen::MatrixXd gram(p, p);
  gram.setZero();
  gram.selfadjointView<Eigen::Lower>().rankUpdate(Z.transpose());
  gram = gram.selfadjointView<Eigen::Lower>();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-13 * ldlt.vectorD().cwiseAbs().maxCoeff()) {
    throw NumericalError("singular X'X in covariance estimate");
  }
  const Eigen::MatrixXd gram_inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));

  const double f2 = f0 * f0;
  Eigen::VectorXd d(residuals.size());
  for (Eigen::Index t = 0; t < d.size(); ++t) {
    d(t) = (residuals(t) > 0.0 ? q : 1.0 - q) / f2;
  }
  const Eigen::MatrixXd Zd = Z.array().colwise() * d.array().sqrt();
  Eigen::MatrixXd meat(p, p);
  meat.setZero();
  meat.selfadjointView<Eigen::Lower>().rankUpdate(Zd.transpose());
  meat = meat.selfadjointView<Eigen::Lower>();

  Eigen::MatrixXd cov = gram_inv * meat * gram_inv;
  cov = 0.5 * (cov + cov.transpose()).eval();
  return cov;
}

double kde_density_at_zero(const Eigen::VectorXd& residuals, double bandwidth, double floor)
{
  if (residuals.size() == 0) {
    throw std::invalid_argument("kde_density_at_zero: empty residuals");
  }
  if (!(bandwidth > 0.0)) {
    throw std::invalid_argument("kde_density_at_zero: bandwidth must be positive");
  }
  double sum = 0.0;
  for (Eigen::Index t = 0; t < residuals.size(); ++t) {
    sum += dist::normal_pdf(residuals(t) / bandwidth);
  }
  const double f0 = sum / (static_cast<double>(residuals.size()) * bandwidth);
  return std::max(f0, floor);
}

double hall_sheather_bandwidth(double sample_size, double q, double alpha_level)
{
  check_quantile(q);
  if (sample_size < 2.0) {
    throw std::invalid_argument("hall_sheather_bandwidth: sample size must be >= 2");
  }
  const double z = dist::normal_quantile(q);
  const double phi = dist::normal_pdf(z);
  const double ratio = 1.5 * phi * phi / (2.0 * z * z + 1.0);
  const double z_level = dist::normal_quantile(1.0 - alpha_level / 2.0);
  return std::pow(sample_size, -1.0 / 3.0) * std::pow(z_level, 2.0 / 3.0) *
         std::pow(ratio, 1.0 / 3.0);
}

double residual_scale_bandwidth(double h_q,
                                double q,
                                const Eigen::VectorXd& y,
                                const Eigen::VectorXd& residuals)
{
  constexpr double kEdge = 1e-10;
  const double sd = stats::population_sd(y);
  const double iqr =
    stats::quantile_type7(residuals, 0.75) - stats::quantile_type7(residuals, 0.25);
  double scale = std::min(sd, iqr / 1.34);
  if (!(scale > 0.0)) {
    scale = sd > 0.0 ? sd : 1.0;
  }
  const double hi = std::min(q + h_q, 1.0 - kEdge);
  const double lo = std::max(q - h_q, kEdge);
  return scale * (dist::normal_quantile(hi) - dist::normal_quantile(lo));
}

double wald_t(double coef, double se)
{
  if (!(se > 0.0)) {
    throw std::invalid_argument("wald_t: standard error must be positive");
  }
  return coef / se;
}

} // namespace pqvar::quantreg
