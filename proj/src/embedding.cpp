#include "pqvar/embedding.hpp"

#include "pqvar/errors.hpp"
#include "pqvar/stats.hpp"

#include <algorithm>
#include <stdexcept>

namespace pqvar {

Breakpoints compute_breakpoints(const Eigen::MatrixXd& returns, double lower_q, double upper_q)
{
  if (!(lower_q > 0.0 && lower_q < upper_q && upper_q < 1.0)) {
    throw std::invalid_argument("breakpoint quantiles must satisfy 0 < lower < upper < 1");
  }
  if (returns.rows() < 10) {
    throw DataError("breakpoints need at least 10 observations per asset");
  }
  Breakpoints bp;
  bp.lower_q = lower_q;
  bp.upper_q = upper_q;
  bp.lower.resize(returns.cols());
  bp.upper.resize(returns.cols());
  for (Eigen::Index j = 0; j < returns.cols(); ++j) {
    const Eigen::VectorXd col = returns.col(j);
    bp.lower(j) = stats::quantile_type7(col, lower_q);
    bp.upper(j) = stats::quantile_type7(col, upper_q);
    if (!(bp.lower(j) < bp.upper(j))) {
      throw DataError("degenerate distribution for asset " + std::to_string(j) +
                      ": lower breakpoint equals upper breakpoint");
    }
  }
  return bp;
}

Breakpoints compute_breakpoints(const ReturnPanel& panel, double lower_q, double upper_q)
{
  return compute_breakpoints(panel.returns, lower_q, upper_q);
}

std::array<double, 3> embed_value(double x, double lower, double upper)
{
  return {std::min(0.0, x - lower), x, std::max(0.0, x - upper)};
}

EmbeddedDesign embed(const Eigen::MatrixXd& inputs, const Breakpoints& bp)
{
  const Eigen::Index n = inputs.cols();
  if (bp.lower.size() != n || bp.upper.size() != n) {
    throw std::invalid_argument("breakpoints do not match the number of assets");
  }
  EmbeddedDesign out;
  out.breakpoints = bp;
  out.X.resize(inputs.rows(), 3 * n);
  out.labels.reserve(static_cast<std::size_t>(3 * n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto x = inputs.col(j).array();
    out.X.col(embedded_column(j, Region::kLower)) = (x - bp.lower(j)).min(0.0).matrix();
    out.X.col(embedded_column(j, Region::kLinear)) = x.matrix();
    out.X.col(embedded_column(j, Region::kUpper)) = (x - bp.upper(j)).max(0.0).matrix();
    for (Region r : kRegions) {
      out.labels.push_back({static_cast<int>(j), r});
    }
  }
  return out;
}

EmbeddedDesign embed(const ReturnPanel& panel, const Breakpoints& bp)
{
  return embed(panel.returns, bp);
}

} // namespace pqvar
