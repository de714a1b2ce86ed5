#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace pqvar::stats {

//! Empirical quantile by linear interpolation of order statistics (the
//! "type 7" rule: h = (n − 1)·p, interpolate between x₍⌊h⌋₎ and x₍⌈h⌉₎).
double quantile_type7(std::span<const double> values, double p);
double quantile_type7(const Eigen::VectorXd& values, double p);

//! Midranks (1-based, ties share the mean of their positions).
std::vector<double> midranks(std::span<const double> values);

//! Population standard deviation (divides by n).
double population_sd(const Eigen::VectorXd& values);

} // namespace pqvar::stats
