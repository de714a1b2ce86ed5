#include "pqvar/synth.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>

namespace pqvar::synth {

namespace {

class InnovationSource
{
public:
  InnovationSource(const ArchetypeSpec& spec)
    : rng_(spec.seed)
    , kind_(spec.innovation)
    , student_(spec.t_df)
    , t_scale_(spec.t_df > 2.0 ? std::sqrt((spec.t_df - 2.0) / spec.t_df) : 1.0)
  {}

  double operator()()
  {
    return kind_ == Innovation::kNormal ? normal_(rng_) : t_scale_ * student_(rng_);
  }

private:
  std::mt19937_64 rng_;
  Innovation kind_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::student_t_distribution<double> student_;
  double t_scale_;
};

Eigen::MatrixXd effective_var_matrix(const ArchetypeSpec& spec)
{
  return spec.A.size() == 0 ? default_var_matrix(spec.n) : spec.A;
}

double effective_omega(const ArchetypeSpec& spec)
{
  return spec.omega > 0.0 ? spec.omega : 1.0 - spec.arch - spec.garch;
}

} // namespace

std::string_view kind_name(Kind kind)
{
  switch (kind) {
    case Kind::kWhiteNoise: return "white-noise";
    case Kind::kLinearVar: return "linear-var";
    case Kind::kGarchLike: return "garch-like";
    case Kind::kSkewAr: return "skew-ar";
    case Kind::kAsymmetric: return "asymmetric";
  }
  return "?";
}

std::optional<Kind> parse_kind(std::string_view name)
{
  for (Kind k : {Kind::kWhiteNoise, Kind::kLinearVar, Kind::kGarchLike, Kind::kSkewAr,
                 Kind::kAsymmetric}) {
    if (kind_name(k) == name) {
      return k;
    }
  }
  return std::nullopt;
}

Eigen::MatrixXd default_var_matrix(int n)
{
  Eigen::MatrixXd A = -0.3 * Eigen::MatrixXd::Identity(n, n);
  if (n >= 2) {
    A(0, 1) = -0.2;
  }
  return A;
}

std::vector<double> default_caps(int n)
{
  std::vector<double> caps(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    caps[static_cast<std::size_t>(i)] = 1e11 * std::pow(0.8, i);
  }
  return caps;
}

void validate(const ArchetypeSpec& spec)
{
  if (spec.n < 1 || spec.t < 2 || spec.burn_in < 0) {
    throw std::invalid_argument("synth: need n >= 1, t >= 2, burn_in >= 0");
  }
  if (spec.innovation == Innovation::kStudentT && !(spec.t_df > 2.0)) {
    throw std::invalid_argument("synth: Student-t innovations need df > 2 for unit variance");
  }
  if (!spec.caps.empty() && static_cast<int>(spec.caps.size()) != spec.n) {
    throw std::invalid_argument("synth: caps length differs from n");
  }
  switch (spec.kind) {
    case Kind::kWhiteNoise: break;
    case Kind::kLinearVar: {
      const Eigen::MatrixXd A = effective_var_matrix(spec);
      if (A.rows() != spec.n || A.cols() != spec.n) {
        throw std::invalid_argument("synth: planted A must be n x n");
      }
      const double radius = A.eigenvalues().cwiseAbs().maxCoeff();
      if (!(radius < 1.0)) {
        throw std::invalid_argument("synth: planted A is not stationary (spectral radius " +
                                    std::to_string(radius) + ")");
      }
      break;
    }
    case Kind::kGarchLike:
      if (spec.arch < 0.0 || spec.garch < 0.0 || !(spec.arch + spec.garch < 1.0) ||
          !(effective_omega(spec) > 0.0)) {
        throw std::invalid_argument("synth: garch-like needs a, b >= 0, a + b < 1, omega > 0");
      }
      break;
    case Kind::kSkewAr:
      if (!(std::fabs(spec.skew_shift) < 1.0)) {
        throw std::invalid_argument("synth: skew-ar needs |skew_shift| < 1");
      }
      break;
    case Kind::kAsymmetric:
      if (!(spec.response_slope >= 0.0 && spec.response_slope < 1.0)) {
        throw std::invalid_argument("synth: asymmetric needs 0 <= response_slope < 1");
      }
      break;
  }
}

ReturnPanel generate(const ArchetypeSpec& spec)
{
  validate(spec);
  const int n = spec.n;
  const int total = spec.t + spec.burn_in;
  InnovationSource draw(spec);

  Eigen::MatrixXd out(spec.t, n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sigma2 = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd eps(n);
  const Eigen::MatrixXd A = spec.kind == Kind::kLinearVar ? effective_var_matrix(spec)
                                                          : Eigen::MatrixXd();
  const double omega = effective_omega(spec);

  for (int step = 0; step < total; ++step) {
    for (int j = 0; j < n; ++j) {
      eps(j) = draw();
    }
    Eigen::VectorXd next(n);
    switch (spec.kind) {
      case Kind::kWhiteNoise:
        next = eps;
        break;
      case Kind::kLinearVar:
        next = A.transpose() * y + eps;
        break;
      case Kind::kGarchLike:
        for (int j = 0; j < n; ++j) {
          sigma2(j) = omega + spec.arch * y(j) * y(j) + spec.garch * sigma2(j);
          next(j) = std::sqrt(sigma2(j)) * eps(j);
        }
        break;
      case Kind::kSkewAr:
        for (int j = 0; j < n; ++j) {
          const double lambda = std::clamp(spec.skew_shift * y(j), -0.9, 0.9);
          next(j) = eps(j) * (eps(j) > 0.0 ? 1.0 + lambda : 1.0 - lambda);
        }
        break;
      case Kind::kAsymmetric:
        for (int j = 0; j < n; ++j) {
          const double boost = spec.response_slope * std::max(0.0, y(j) - spec.response_threshold);
          next(j) = eps(j) > 0.0 ? eps(j) * (1.0 + boost) : eps(j);
        }
        break;
    }
    y = next;
    if (step >= spec.burn_in) {
      out.row(step - spec.burn_in) = y.transpose();
    }
  }

  ReturnPanel panel;
  panel.returns = std::move(out);
  const auto caps = spec.caps.empty() ? default_caps(n) : spec.caps;
  for (int j = 0; j < n; ++j) {
    panel.assets.push_back({"A" + std::to_string(j), caps[static_cast<std::size_t>(j)]});
  }
  panel.transform_applied = false;
  return panel;
}

std::vector<PlantedEdge> planted_edges(const ArchetypeSpec& spec)
{
  std::vector<PlantedEdge> edges;
  auto self_edge = [&](int i, Region r, Target t, int sign, double coef) {
    edges.push_back({i, i, Layer{r, t}, sign, coef});
  };
  switch (spec.kind) {
    case Kind::kWhiteNoise: break;
    case Kind::kLinearVar:
      for (const auto& c : planted_coefficients(spec)) {
        for (Region r : kRegions) {
          edges.push_back({c.source, c.target, Layer{r, Target::kMedian}, c.value > 0 ? 1 : -1,
                           c.value});
        }
      }
      break;
    case Kind::kGarchLike:
      for (int i = 0; i < spec.n; ++i) {
        self_edge(i, Region::kLower, Target::kLowerTail, 1, spec.arch);
        self_edge(i, Region::kUpper, Target::kUpperTail, 1, spec.arch);
        self_edge(i, Region::kLower, Target::kUpperTail, -1, spec.arch);
        self_edge(i, Region::kUpper, Target::kLowerTail, -1, spec.arch);
      }
      break;
    case Kind::kSkewAr:
      for (int i = 0; i < spec.n; ++i) {
        for (Region r : kRegions) {
          const int sign = spec.skew_shift > 0 ? 1 : -1;
          self_edge(i, r, Target::kLowerTail, sign, spec.skew_shift);
          self_edge(i, r, Target::kUpperTail, sign, spec.skew_shift);
        }
      }
      break;
    case Kind::kAsymmetric:
      for (int i = 0; i < spec.n; ++i) {
        if (spec.response_slope > 0.0) {
          self_edge(i, Region::kUpper, Target::kUpperTail, 1, spec.response_slope);
        }
      }
      break;
  }
  return edges;
}

std::vector<PlantedCoefficient> planted_coefficients(const ArchetypeSpec& spec)
{
  std::vector<PlantedCoefficient> out;
  if (spec.kind != Kind::kLinearVar) {
    return out;
  }
  const Eigen::MatrixXd A = effective_var_matrix(spec);
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (A(i, j) != 0.0) {
        out.push_back({static_cast<int>(i), static_cast<int>(j), A(i, j)});
      }
    }
  }
  return out;
}

Recovery score_recovery(const std::vector<PlantedEdge>& planted, const LayerSet& recovered)
{
  using Key = std::tuple<int, int, std::size_t, int>;
  std::set<Key> truth;
  for (const auto& e : planted) {
    truth.emplace(e.source, e.target, e.layer.index(), e.sign);
  }

  auto finish = [](RecoveryScore& s) {
    if (s.recovered > 0) {
      s.precision = static_cast<double>(s.matched) / s.recovered;
    }
    if (s.planted > 0) {
      s.recall = static_cast<double>(s.matched) / s.planted;
    }
  };

  Recovery rec;
  rec.pooled.layer = "pooled";
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    auto& s = rec.layers[l];
    s.layer = layer_name(Layer::from_index(l));
    for (const auto& e : planted) {
      s.planted += e.layer.index() == l ? 1 : 0;
    }
    const auto& net = recovered[l];
    for (Eigen::Index i = 0; i < net.adj.rows(); ++i) {
      for (Eigen::Index j = 0; j < net.adj.cols(); ++j) {
        if (net.adj(i, j) == 0) {
          continue;
        }
        ++s.recovered;
        if (truth.count({static_cast<int>(i), static_cast<int>(j), l, net.sign(i, j)})) {
          ++s.matched;
        }
      }
    }
    finish(s);
    rec.pooled.planted += s.planted;
    rec.pooled.recovered += s.recovered;
    rec.pooled.matched += s.matched;
  }
  finish(rec.pooled);
  return rec;
}

PricePanel to_price_panel(const ReturnPanel& panel,
                          bool transform,
                          std::int64_t start,
                          std::int64_t step)
{
  const Eigen::Index rows = panel.returns.rows() + 1;
  PricePanel out;
  out.assets = panel.assets;
  out.prices.resize(rows, panel.returns.cols());
  out.timestamps.resize(static_cast<std::size_t>(rows));
  for (Eigen::Index t = 0; t < rows; ++t) {
    out.timestamps[static_cast<std::size_t>(t)] = start + step * t;
  }
  for (Eigen::Index j = 0; j < panel.returns.cols(); ++j) {
    double log_price = std::log(100.0);
    out.prices(0, j) = 100.0;
    for (Eigen::Index t = 1; t < rows; ++t) {
      const double r = panel.returns(t - 1, j);
      log_price += (transform ? destabilize(r) : r) / 100.0;
      out.prices(t, j) = std::exp(log_price);
    }
  }
  return out;
}

} // namespace pqvar::synth
