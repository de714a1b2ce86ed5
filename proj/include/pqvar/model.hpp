#pragma once

#include "pqvar/embedding.hpp"
#include "pqvar/ingest.hpp"
#include "pqvar/layers.hpp"
#include "pqvar/quantreg.hpp"

#include <Eigen/Dense>

#include <array>
#include <span>
#include <string>
#include <vector>

namespace pqvar {

//! How the variance of a net slope A± + A is assembled from the joint
//! coefficient covariance.
enum class NetSlopeVariance {
  kMinusCovariance, //!< Var(A±) + Var(A) − 2Cov(A±, A) (default)
  kSumRule,         //!< Var(A±) + Var(A) + 2Cov(A±, A)
};

struct PqvarOptions
{
  quantreg::SolverOptions solver;
  double lower_quantile = 0.1; //!< lower tail target
  double upper_quantile = 0.9; //!< upper tail target
  double lower_breakpoint = 0.1;
  double upper_breakpoint = 0.9;
  NetSlopeVariance net_slope_variance = NetSlopeVariance::kMinusCovariance;
  int threads = 0; //!< 0: OpenMP default
};

struct AssetFailure
{
  int asset = 0;
  std::string message;
};

//! The nine sub-network coefficient and t-value matrices. Entry (i, j) of a
//! matrix is the effect of source asset i on target asset j. Tail-region
//! layers hold net slopes A± + A; their t-values use the adjusted variance.
struct PqvarFit
{
  std::array<Eigen::MatrixXd, kLayerCount> coef;
  std::array<Eigen::MatrixXd, kLayerCount> t_vals;
  std::array<Eigen::VectorXd, 3> intercepts; //!< per Target; tails are residual intercepts
  std::array<double, 3> quantiles{0.1, 0.5, 0.9};
  Breakpoints breakpoints;
  Eigen::MatrixXd median_residuals; //!< (T−1)×N; not persisted
  std::vector<AssetFailure> failures;
  int floored_variances = 0; //!< net-slope variances that came out negative

  Eigen::Index assets() const { return coef[0].rows(); }
  const Eigen::MatrixXd& coefficients(Layer layer) const { return coef[layer.index()]; }
  const Eigen::MatrixXd& t_values(Layer layer) const { return t_vals[layer.index()]; }

  //! Partial-effect matrix: A± = net slope − A for tail regions, A for linear.
  Eigen::MatrixXd partial(Layer layer) const;
};

enum class StandardVarMethod {
  kMedianQuantile, //!< per-asset q = 0.5 regression on the raw lagged design
  kLeastSquares,   //!< multivariate least squares with Γ⁻¹ ⊗ Σ_ε covariance
};

struct StandardVarFit
{
  Eigen::MatrixXd A;      //!< N×N, source rows, target columns
  Eigen::MatrixXd T_vals; //!< N×N
  Eigen::VectorXd intercepts;
  Eigen::MatrixXd Sigma_eps; //!< residual covariance
  Eigen::MatrixXd Gamma;     //!< X′X / T of the lagged covariates
  StandardVarMethod method = StandardVarMethod::kMedianQuantile;
  std::vector<AssetFailure> failures;
};

struct NetSlope
{
  Eigen::MatrixXd coef;
  Eigen::MatrixXd variance;
  int floored = 0;
};

//! Net slopes A± + A of one tail region for one target quantile.
//! `joint_cov[j]` is the (3N+1)×(3N+1) covariance of target j's fit, ordered
//! like the embedded design with the intercept last. Negative variances are
//! floored at `variance_floor` and counted.
NetSlope net_slope(const Eigen::MatrixXd& A_tail,
                   const Eigen::MatrixXd& A_lin,
                   std::span<const Eigen::MatrixXd> joint_cov,
                   Region tail_region,
                   NetSlopeVariance rule,
                   double variance_floor);

//! ε_t = y_t − X_t·alpha − c for a median fit on the same design.
Eigen::VectorXd residual_shift(const Eigen::VectorXd& y,
                               const Eigen::MatrixXd& X,
                               const quantreg::QuantileFit& median_fit);

//! Lag-1 alignment: rows 0..T−2 of the panel as inputs, rows 1..T−1 as targets.
Eigen::MatrixXd lagged_inputs(const Eigen::MatrixXd& returns);
Eigen::MatrixXd lagged_targets(const Eigen::MatrixXd& returns);

//! Full piecewise quantile VAR fit, one target asset per OpenMP task.
PqvarFit fit_pqvar(const ReturnPanel& panel, const PqvarOptions& opts = {});

//! Single-threaded reference for fit_pqvar; results are bit-identical.
PqvarFit fit_pqvar_serial(const ReturnPanel& panel, const PqvarOptions& opts = {});

StandardVarFit fit_standard_var(const ReturnPanel& panel,
                                StandardVarMethod method = StandardVarMethod::kMedianQuantile,
                                const quantreg::SolverOptions& solver = {});

//! Predicted (q_low, median, q_high) for every target given one lagged
//! observation vector. Masked targets yield NaN.
std::array<Eigen::VectorXd, 3> predict_quantiles(const PqvarFit& fit,
                                                 const Eigen::VectorXd& lagged);

} // namespace pqvar
