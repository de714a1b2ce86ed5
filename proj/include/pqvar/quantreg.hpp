#pragma once

#include <Eigen/Dense>

namespace pqvar::quantreg {

struct SolverOptions
{
  double tolerance = 1e-8;   //!< IRLS stop: max absolute coefficient change
  int max_iter = 30;         //!< IRLS iteration cap; only a warm start, so a short run is enough
  double delta = 1e-6;       //!< IRLS residual floor in the weights 1/max(|ε|, δ)
  double alpha_level = 0.05; //!< Hall–Sheather confidence level
  double f0_floor = 1e-10;   //!< lower bound on the residual density at zero
  int max_pivots = 20000;    //!< vertex-refinement pivot cap
};

//! One fitted linear quantile regression y ≈ X·alpha + intercept.
struct QuantileFit
{
  double q = 0.5;
  Eigen::VectorXd alpha;     //!< K slopes
  double intercept = 0.0;
  Eigen::VectorXd residuals; //!< y − X·alpha − intercept
  Eigen::MatrixXd cov;       //!< (K+1)×(K+1), ordered [alpha..., intercept]
  double f0 = 0.0;           //!< residual density at zero
  double bandwidth = 0.0;    //!< KDE bandwidth in residual units
  double objective = 0.0;    //!< Σ pinball loss at the solution
  int irls_iterations = 0;
  int pivots = 0;

  //! Wald t-values alpha_k / sqrt(cov_kk) for the K slopes.
  Eigen::VectorXd t_values() const;
};

double pinball_loss(double y, double y_hat, double q);

//! Σ_t pinball loss of the residual vector (y − ŷ).
double total_pinball_loss(const Eigen::VectorXd& residuals, double q);

//! Minimizes Σ pinball loss over (alpha, intercept). Solution is exact to
//! floating-point precision: IRLS provides a warm start that is then
//! driven to an optimal vertex of the underlying linear program.
//!
//! Throws RankDeficientError if [X, 1] is rank deficient and
//! ConvergenceError if optimality could not be certified.
QuantileFit fit(const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y,
                double q,
                const SolverOptions& opts = {});

//! Solves for the stacked coefficient vector [alpha..., intercept] only.
Eigen::VectorXd solve(const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& y,
                      double q,
                      const SolverOptions& opts = {},
                      int* irls_iterations = nullptr,
                      int* pivots = nullptr);

//! Sandwich covariance (Z′Z)⁻¹ Z′DZ (Z′Z)⁻¹ of [alpha..., intercept], where
//! Z = [X, 1] and D = diag(q/f0² if ε > 0 else (1−q)/f0²).
Eigen::MatrixXd estimate_covariance(const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& residuals,
                                    double q,
                                    double f0);

//! Gaussian-kernel density of the residuals at zero, floored at `floor`.
double kde_density_at_zero(const Eigen::VectorXd& residuals, double bandwidth, double floor);

//! Hall–Sheather bandwidth on the probability scale:
//! T^(−1/3) · z_{1−α/2}^(2/3) · [1.5 φ²(Φ⁻¹(q)) / (2Φ⁻¹(q)² + 1)]^(1/3).
double hall_sheather_bandwidth(double sample_size, double q, double alpha_level);

//! Converts a probability-scale bandwidth into residual units:
//! min(sd(y), IQR(ε)/1.34) · (Φ⁻¹(q + h) − Φ⁻¹(q − h)).
double residual_scale_bandwidth(double h_q,
                                double q,
                                const Eigen::VectorXd& y,
                                const Eigen::VectorXd& residuals);

double wald_t(double coef, double se);

} // namespace pqvar::quantreg
