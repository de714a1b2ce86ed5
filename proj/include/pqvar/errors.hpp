#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pqvar {

//! Malformed or insufficient input data (exit code 2 at the CLI).
class DataError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! A numerical procedure could not produce a trustworthy result (exit code 3).
class NumericalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! The design matrix (with intercept) does not have full column rank.
class RankDeficientError : public NumericalError
{
public:
  RankDeficientError(const std::string& what, std::vector<int> columns)
    : NumericalError(what)
    , columns_(std::move(columns))
  {}

  //! Indices of the covariate columns that are linearly dependent on the
  //! others. The intercept is reported as -1.
  const std::vector<int>& columns() const noexcept { return columns_; }

private:
  std::vector<int> columns_;
};

//! The quantile-regression solver stopped without certifying optimality.
class ConvergenceError : public NumericalError
{
public:
  ConvergenceError(const std::string& what, double gap)
    : NumericalError(what)
    , gap_(gap)
  {}

  //! Most negative directional derivative left at the final vertex.
  double gap() const noexcept { return gap_; }

private:
  double gap_;
};

} // namespace pqvar
