#pragma once

namespace pqvar::dist {

double normal_pdf(double x);
double normal_cdf(double x);

//! Inverse of the standard normal CDF; p must lie in (0, 1).
double normal_quantile(double p);

//! Two-sided critical value Φ⁻¹(1 − α/2) for significance level α ∈ (0, 1).
double two_sided_critical_value(double alpha);

//! Two-sided p-value of a Student-t statistic with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

} // namespace pqvar::dist
