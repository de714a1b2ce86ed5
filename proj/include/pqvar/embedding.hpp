#pragma once

#include "pqvar/ingest.hpp"
#include "pqvar/layers.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace pqvar {

//! Per-asset knots of the piecewise-linear embedding.
struct Breakpoints
{
  Eigen::VectorXd lower; //!< Q_{X_j}(lower_q)
  Eigen::VectorXd upper; //!< Q_{X_j}(upper_q)
  double lower_q = 0.1;
  double upper_q = 0.9;
};

struct ColumnLabel
{
  int asset = 0;
  Region region = Region::kLinear;
};

//! T×3N design ordered as blocks {X⁻_j, X_j, X⁺_j} per asset j.
struct EmbeddedDesign
{
  Eigen::MatrixXd X;
  Breakpoints breakpoints;
  std::vector<ColumnLabel> labels;
};

constexpr Eigen::Index embedded_column(Eigen::Index asset, Region region)
{
  return 3 * asset + static_cast<Eigen::Index>(region);
}

//! Type-7 empirical quantiles of each column. Throws DataError for columns
//! with fewer than 10 observations or with lower == upper.
Breakpoints compute_breakpoints(const Eigen::MatrixXd& returns,
                                double lower_q = 0.1,
                                double upper_q = 0.9);
Breakpoints compute_breakpoints(const ReturnPanel& panel,
                                double lower_q = 0.1,
                                double upper_q = 0.9);

//! (min(0, x − lower), x, max(0, x − upper)).
std::array<double, 3> embed_value(double x, double lower, double upper);

EmbeddedDesign embed(const Eigen::MatrixXd& inputs, const Breakpoints& bp);
EmbeddedDesign embed(const ReturnPanel& panel, const Breakpoints& bp);

} // namespace pqvar
