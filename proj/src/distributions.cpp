#include "pqvar/distributions.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <stdexcept>

namespace pqvar::dist {

namespace {
const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);
}

double normal_pdf(double x)
{
  return boost::math::pdf(kStdNormal, x);
}

double normal_cdf(double x)
{
  return boost::math::cdf(kStdNormal, x);
}

double normal_quantile(double p)
{
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  }
  return boost::math::quantile(kStdNormal, p);
}

double two_sided_critical_value(double alpha)
{
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("significance level must lie in (0, 1)");
  }
  return normal_quantile(1.0 - alpha / 2.0);
}

double student_t_two_sided_p(double t, double df)
{
  if (!std::isfinite(t)) {
    return 0.0;
  }
  boost::math::students_t_distribution<double> dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

} // namespace pqvar::dist
