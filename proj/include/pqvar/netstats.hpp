#pragma once

#include "pqvar/layers.hpp"
#include "pqvar/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pqvar {

//! Thresholded network. adj(i, j) = 1 when |t(i, j)| exceeds the two-sided
//! normal critical value; sign(i, j) = sign of the effect where linked.
struct SubNetwork
{
  std::string name;
  Eigen::MatrixXi adj;
  Eigen::MatrixXi sign;
  Eigen::MatrixXd t_vals;

  Eigen::Index size() const { return adj.rows(); }
  int links() const { return adj.sum(); }
};

using LayerSet = std::array<SubNetwork, kLayerCount>;

//! Layers plus their elementwise sum (0..9 parallel edges per ordered pair).
struct CausalMultigraph
{
  LayerSet layers;
  Eigen::MatrixXi total_adj;
};

struct Spearman
{
  std::optional<double> rho;     //!< empty when either input is constant
  std::optional<double> p_value; //!< two-sided, Student-t(n − 2)
};

struct DegreeStats
{
  double scale = 1.0; //!< degrees divided by this before mean/σ
  int links = 0;      //!< total multiplicity
  double mean_degree = 0.0;
  double sd_out = 0.0;
  double sd_in = 0.0;
  Spearman out_vs_cap;
  Spearman in_vs_cap;
  std::optional<double> p_down;
};

struct CcdfPoint
{
  int k = 0;
  double survival = 0.0; //!< P(degree ≥ k)
};

struct LinkSplit
{
  std::vector<std::pair<int, int>> self;
  std::vector<std::pair<int, int>> cross;
};

//! One QIG edge type within a stratum.
struct QigEdge
{
  Layer layer;
  int links = 0;
  int possible = 0;
  double proportion = 0.0;
  std::optional<double> positive_share; //!< undefined when links == 0
};

struct QigStratum
{
  std::array<QigEdge, kLayerCount> edges;
  std::array<double, 3> region_weight{}; //!< mean outgoing edge weight per input region
  std::array<double, 3> target_weight{}; //!< mean incoming edge weight per target
};

struct Qig
{
  QigStratum self;
  QigStratum cross;
};

//! Spearman correlations between the 18 degree vectors {out, in} × 9 layers.
struct DegreeCorrelation
{
  std::vector<std::string> labels;
  Eigen::MatrixXd rho;     //!< NaN where undefined
  Eigen::MatrixXd p_value; //!< NaN where undefined
  Eigen::MatrixXd masked;  //!< rho where p ≤ level, NaN elsewhere
  double level = 0.05;
};

struct LayerReport
{
  std::string name;
  DegreeStats stats;
  int self_links = 0;
  int cross_links = 0;
  std::vector<CcdfPoint> ccdf_out;
  std::vector<CcdfPoint> ccdf_in;
};

struct NetworkReport
{
  double alpha = 0.001;
  double critical_value = 0.0;
  std::vector<std::string> asset_ids;
  std::vector<double> caps;
  std::array<LayerReport, kLayerCount> layers;
  Qig qig;
  LayerReport multigraph;   //!< degrees / 9
  LayerReport piecewise;    //!< the three median-target layers, degrees / 3
  LayerReport standard_var; //!< baseline, degrees / 1
  DegreeCorrelation degree_correlation;
};

SubNetwork threshold(const Eigen::MatrixXd& t_vals, double alpha, std::string name = {});
LayerSet threshold(const PqvarFit& fit, double alpha);
SubNetwork threshold(const StandardVarFit& fit, double alpha);

LinkSplit split_self_cross(const SubNetwork& net);

Qig qig_aggregate(const LayerSet& layers);

Eigen::VectorXi out_degrees(const Eigen::MatrixXi& adj);
Eigen::VectorXi in_degrees(const Eigen::MatrixXi& adj);

Spearman spearman(std::span<const double> x, std::span<const double> y);

//! "***" for p ≤ 0.001, "**" for p ≤ 0.01, "*" for p ≤ 0.05, else "".
std::string significance_stars(const std::optional<double>& p_value);

//! Share of cross links whose source has the larger cap; ties count 0.5.
//! Links are weighted by multiplicity. Empty when there are no cross links.
std::optional<double> p_down(const Eigen::MatrixXi& adj, std::span<const double> caps);

std::vector<CcdfPoint> ccdf(std::span<const int> degrees);

DegreeStats degree_stats(const Eigen::MatrixXi& adj, std::span<const double> caps, double scale = 1.0);

CausalMultigraph build_multigraph(const LayerSet& layers);

//! Sum of the three median-target layers.
Eigen::MatrixXi piecewise_median(const LayerSet& layers);

DegreeCorrelation degree_correlation_matrix(const LayerSet& layers, double level = 0.05);

LayerReport layer_report(const std::string& name,
                         const Eigen::MatrixXi& adj,
                         std::span<const double> caps,
                         double scale = 1.0);

NetworkReport analyze(const PqvarFit& fit,
                      const StandardVarFit& baseline,
                      const std::vector<Asset>& assets,
                      double alpha);

} // namespace pqvar
