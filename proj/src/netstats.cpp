#include "pqvar/netstats.hpp"

#include "pqvar/distributions.hpp"
#include "pqvar/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace pqvar {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double population_sd(const Eigen::VectorXd& v)
{
  return stats::population_sd(v);
}

std::vector<double> to_vector(const Eigen::VectorXi& v)
{
  return {v.data(), v.data() + v.size()};
}

} // namespace

SubNetwork threshold(const Eigen::MatrixXd& t_vals, double alpha, std::string name)
{
  const double crit = dist::two_sided_critical_value(alpha);
  SubNetwork net;
  net.name = std::move(name);
  net.t_vals = t_vals;
  net.adj = Eigen::MatrixXi::Zero(t_vals.rows(), t_vals.cols());
  net.sign = Eigen::MatrixXi::Zero(t_vals.rows(), t_vals.cols());
  for (Eigen::Index i = 0; i < t_vals.rows(); ++i) {
    for (Eigen::Index j = 0; j < t_vals.cols(); ++j) {
      const double t = t_vals(i, j);
      // NaN (masked fits) compares false and never links
      if (std::fabs(t) > crit) {
        net.adj(i, j) = 1;
        net.sign(i, j) = t > 0.0 ? 1 : -1;
      }
    }
  }
  return net;
}

LayerSet threshold(const PqvarFit& fit, double alpha)
{
  LayerSet layers;
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    layers[l] = threshold(fit.t_vals[l], alpha, layer_name(Layer::from_index(l)));
  }
  return layers;
}

SubNetwork threshold(const StandardVarFit& fit, double alpha)
{
  return threshold(fit.T_vals, alpha, "standard_var");
}

LinkSplit split_self_cross(const SubNetwork& net)
{
  LinkSplit split;
  for (Eigen::Index i = 0; i < net.adj.rows(); ++i) {
    for (Eigen::Index j = 0; j < net.adj.cols(); ++j) {
      if (net.adj(i, j) == 0) {
        continue;
      }
      (i == j ? split.self : split.cross).emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return split;
}

Qig qig_aggregate(const LayerSet& layers)
{
  Qig qig;
  const Eigen::Index n = layers[0].size();
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    const auto& net = layers[l];
    int self_links = 0, self_pos = 0, cross_links = 0, cross_pos = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (net.adj(i, j) == 0) {
          continue;
        }
        const int pos = net.sign(i, j) > 0 ? 1 : 0;
        if (i == j) {
          ++self_links;
          self_pos += pos;
        } else {
          ++cross_links;
          cross_pos += pos;
        }
      }
    }
    const Layer layer = Layer::from_index(l);
    auto make = [&](int links, int pos, int possible) {
      QigEdge e;
      e.layer = layer;
      e.links = links;
      e.possible = possible;
      e.proportion = possible > 0 ? static_cast<double>(links) / possible : 0.0;
      if (links > 0) {
        e.positive_share = static_cast<double>(pos) / links;
      }
      return e;
    };
    qig.self.edges[l] = make(self_links, self_pos, static_cast<int>(n));
    qig.cross.edges[l] = make(cross_links, cross_pos, static_cast<int>(n * (n - 1)));
  }
  for (QigStratum* s : {&qig.self, &qig.cross}) {
    for (std::size_t k = 0; k < 3; ++k) {
      double out = 0.0, in = 0.0;
      for (std::size_t m = 0; m < 3; ++m) {
        out += s->edges[k * 3 + m].proportion; // region k → target m
        in += s->edges[m * 3 + k].proportion;  // region m → target k
      }
      s->region_weight[k] = out / 3.0;
      s->target_weight[k] = in / 3.0;
    }
  }
  return qig;
}

Eigen::VectorXi out_degrees(const Eigen::MatrixXi& adj)
{
  return adj.rowwise().sum();
}

Eigen::VectorXi in_degrees(const Eigen::MatrixXi& adj)
{
  return adj.colwise().sum().transpose();
}

Spearman spearman(std::span<const double> x, std::span<const double> y)
{
  if (x.size() != y.size()) {
    throw std::invalid_argument("spearman: inputs differ in length");
  }
  if (x.size() < 3) {
    throw std::invalid_argument("spearman: need at least 3 observations");
  }
  const auto rx = stats::midranks(x);
  const auto ry = stats::midranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < rx.size(); ++k) {
    const double dx = rx[k] - mx;
    const double dy = ry[k] - mx;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  Spearman out;
  if (sxx == 0.0 || syy == 0.0) {
    return out;
  }
  const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  out.rho = rho;
  if (std::fabs(rho) >= 1.0) {
    out.p_value = 0.0;
  } else {
    const double t = rho * std::sqrt((n - 2.0) / (1.0 - rho * rho));
    out.p_value = dist::student_t_two_sided_p(t, n - 2.0);
  }
  return out;
}

std::string significance_stars(const std::optional<double>& p_value)
{
  if (!p_value) {
    return "";
  }
  if (*p_value <= 0.001) {
    return "***";
  }
  if (*p_value <= 0.01) {
    return "**";
  }
  if (*p_value <= 0.05) {
    return "*";
  }
  return "";
}

std::optional<double> p_down(const Eigen::MatrixXi& adj, std::span<const double> caps)
{
  if (static_cast<Eigen::Index>(caps.size()) != adj.rows()) {
    throw std::invalid_argument("p_down: caps do not match network size");
  }
  double down = 0.0;
  long total = 0;
  for (Eigen::Index i = 0; i < adj.rows(); ++i) {
    for (Eigen::Index j = 0; j < adj.cols(); ++j) {
      if (i == j || adj(i, j) == 0) {
        continue;
      }
      const double w = adj(i, j);
      const double ci = caps[static_cast<std::size_t>(i)];
      const double cj = caps[static_cast<std::size_t>(j)];
      down += w * (ci > cj ? 1.0 : (ci == cj ? 0.5 : 0.0));
      total += adj(i, j);
    }
  }
  if (total == 0) {
    return std::nullopt;
  }
  return down / static_cast<double>(total);
}

std::vector<CcdfPoint> ccdf(std::span<const int> degrees)
{
  std::vector<CcdfPoint> out;
  if (degrees.empty()) {
    return out;
  }
  std::map<int, int> counts;
  for (int d : degrees) {
    ++counts[d];
  }
  counts.try_emplace(0, 0);
  const double n = static_cast<double>(degrees.size());
  int at_least = static_cast<int>(degrees.size());
  for (const auto& [k, c] : counts) {
    if (k < 0) {
      at_least -= c;
      continue;
    }
    out.push_back({k, at_least / n});
    at_least -= c;
  }
  return out;
}

DegreeStats degree_stats(const Eigen::MatrixXi& adj, std::span<const double> caps, double scale)
{
  if (!(scale > 0.0)) {
    throw std::invalid_argument("degree_stats: scale must be positive");
  }
  DegreeStats s;
  s.scale = scale;
  s.links = adj.sum();
  const Eigen::VectorXi out = out_degrees(adj);
  const Eigen::VectorXi in = in_degrees(adj);
  const Eigen::VectorXd out_s = out.cast<double>() / scale;
  const Eigen::VectorXd in_s = in.cast<double>() / scale;
  s.mean_degree = out.size() > 0 ? out_s.mean() : 0.0;
  s.sd_out = population_sd(out_s);
  s.sd_in = population_sd(in_s);
  if (caps.size() >= 3) {
    const auto out_v = to_vector(out);
    const auto in_v = to_vector(in);
    s.out_vs_cap = spearman(out_v, caps);
    s.in_vs_cap = spearman(in_v, caps);
  }
  s.p_down = p_down(adj, caps);
  return s;
}

CausalMultigraph build_multigraph(const LayerSet& layers)
{
  CausalMultigraph mg;
  mg.layers = layers;
  const Eigen::Index n = layers[0].size();
  mg.total_adj = Eigen::MatrixXi::Zero(n, n);
  for (const auto& l : layers) {
    mg.total_adj += l.adj;
  }
  return mg;
}

Eigen::MatrixXi piecewise_median(const LayerSet& layers)
{
  Eigen::MatrixXi sum = Eigen::MatrixXi::Zero(layers[0].size(), layers[0].size());
  for (Region r : kRegions) {
    sum += layers[Layer{r, Target::kMedian}.index()].adj;
  }
  return sum;
}

DegreeCorrelation degree_correlation_matrix(const LayerSet& layers, double level)
{
  DegreeCorrelation dc;
  dc.level = level;
  std::vector<std::vector<double>> vectors;
  for (const char* direction : {"out", "in"}) {
    for (std::size_t l = 0; l < kLayerCount; ++l) {
      const auto& adj = layers[l].adj;
      const Eigen::VectorXi d = std::string(direction) == "out" ? out_degrees(adj) : in_degrees(adj);
      vectors.push_back(to_vector(d));
      dc.labels.push_back(std::string(direction) + ":" + layer_name(Layer::from_index(l)));
    }
  }
  const auto m = static_cast<Eigen::Index>(vectors.size());
  dc.rho = Eigen::MatrixXd::Constant(m, m, kNaN);
  dc.p_value = Eigen::MatrixXd::Constant(m, m, kNaN);
  dc.masked = Eigen::MatrixXd::Constant(m, m, kNaN);
  if (vectors[0].size() < 3) {
    return dc;
  }
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a; b < m; ++b) {
      const auto s = spearman(vectors[static_cast<std::size_t>(a)], vectors[static_cast<std::size_t>(b)]);
      if (!s.rho) {
        continue;
      }
      dc.rho(a, b) = dc.rho(b, a) = *s.rho;
      dc.p_value(a, b) = dc.p_value(b, a) = *s.p_value;
      if (*s.p_value <= level) {
        dc.masked(a, b) = dc.masked(b, a) = *s.rho;
      }
    }
  }
  return dc;
}

LayerReport layer_report(const std::string& name,
                         const Eigen::MatrixXi& adj,
                         std::span<const double> caps,
                         double scale)
{
  LayerReport r;
  r.name = name;
  r.stats = degree_stats(adj, caps, scale);
  const int diag = adj.diagonal().sum();
  r.self_links = diag;
  r.cross_links = adj.sum() - diag;
  const auto out = to_vector(out_degrees(adj));
  const auto in = to_vector(in_degrees(adj));
  const std::vector<int> out_i(out.begin(), out.end());
  const std::vector<int> in_i(in.begin(), in.end());
  r.ccdf_out = ccdf(out_i);
  r.ccdf_in = ccdf(in_i);
  return r;
}

NetworkReport analyze(const PqvarFit& fit,
                      const StandardVarFit& baseline,
                      const std::vector<Asset>& assets,
                      double alpha)
{
  if (static_cast<Eigen::Index>(assets.size()) != fit.assets() ||
      baseline.A.rows() != fit.assets()) {
    throw std::invalid_argument("analyze: asset count mismatch between fits and metadata");
  }
  NetworkReport report;
  report.alpha = alpha;
  report.critical_value = dist::two_sided_critical_value(alpha);
  for (const auto& a : assets) {
    report.asset_ids.push_back(a.id);
    report.caps.push_back(a.market_cap);
  }
  const std::span<const double> caps(report.caps);

  const LayerSet layers = threshold(fit, alpha);
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    report.layers[l] = layer_report(layers[l].name, layers[l].adj, caps);
  }
  report.qig = qig_aggregate(layers);
  const auto mg = build_multigraph(layers);
  report.multigraph = layer_report("multigraph", mg.total_adj, caps, static_cast<double>(kLayerCount));
  report.piecewise = layer_report("piecewise_median", piecewise_median(layers), caps, 3.0);
  report.standard_var = layer_report("standard_var", threshold(baseline, alpha).adj, caps);
  report.degree_correlation = degree_correlation_matrix(layers);
  return report;
}

} // namespace pqvar
