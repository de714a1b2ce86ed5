#pragma once

#include "pqvar/ingest.hpp"
#include "pqvar/layers.hpp"
#include "pqvar/netstats.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pqvar::synth {

enum class Kind { kWhiteNoise, kLinearVar, kGarchLike, kSkewAr, kAsymmetric };

enum class Innovation { kNormal, kStudentT };

std::string_view kind_name(Kind kind);
std::optional<Kind> parse_kind(std::string_view name);

//! Parameters of a synthetic panel. Every asset follows the same archetype;
//! only the linear-var kind couples assets.
struct ArchetypeSpec
{
  Kind kind = Kind::kWhiteNoise;
  int n = 2;
  int t = 5000;
  std::uint64_t seed = 1;
  int burn_in = 500;

  Innovation innovation = Innovation::kNormal;
  double t_df = 5.0; //!< Student-t degrees of freedom, rescaled to unit variance

  //! linear-var: y_t = Aᵀ y_{t−1} + ε_t with A(i, j) the effect of i on j.
  //! Empty selects default_var_matrix(n).
  Eigen::MatrixXd A;

  //! garch-like: σ²_t = ω + a·y²_{t−1} + b·σ²_{t−1}; ω ≤ 0 selects 1 − a − b.
  double arch = 0.15;
  double garch = 0.8;
  double omega = 0.0;

  //! skew-ar: ε scaled by (1 ± λ_t) on its positive/negative side,
  //! λ_t = clamp(skew_shift·y_{t−1}, ±0.9).
  double skew_shift = 0.2;

  //! asymmetric: positive side of ε scaled by 1 + slope·max(0, y_{t−1} − threshold).
  double response_slope = 0.5;
  double response_threshold = 1.2815515655446004;

  //! Market caps; empty selects default_caps(n).
  std::vector<double> caps;
};

//! Diagonal −0.3 with one cross effect −0.2 from asset 0 to asset 1.
Eigen::MatrixXd default_var_matrix(int n);

//! Strictly decreasing caps 1e11·0.8^i.
std::vector<double> default_caps(int n);

//! Throws std::invalid_argument for invalid or non-stationary specs.
void validate(const ArchetypeSpec& spec);

//! T×N returns; asset ids are "A0", "A1", ...; bit-reproducible per seed.
ReturnPanel generate(const ArchetypeSpec& spec);

//! One expected link of the planted structure.
struct PlantedEdge
{
  int source = 0;
  int target = 0;
  Layer layer;
  int sign = 0;
  double coefficient = 0.0;
};

//! Links each archetype should produce in the nine sub-networks.
std::vector<PlantedEdge> planted_edges(const ArchetypeSpec& spec);

struct PlantedCoefficient
{
  int source = 0;
  int target = 0;
  double value = 0.0;
};

//! Nonzero entries of the effective A for linear-var; empty otherwise.
std::vector<PlantedCoefficient> planted_coefficients(const ArchetypeSpec& spec);

struct RecoveryScore
{
  std::string layer;
  int planted = 0;
  int recovered = 0;
  int matched = 0; //!< same (source, target, layer, sign)
  std::optional<double> precision;
  std::optional<double> recall;
};

struct Recovery
{
  std::array<RecoveryScore, kLayerCount> layers;
  RecoveryScore pooled;
};

Recovery score_recovery(const std::vector<PlantedEdge>& planted, const LayerSet& recovered);

//! Converts returns back into a price panel that `load_prices` +
//! `make_return_panel(.., transform)` reproduce. Prices start at 100.
PricePanel to_price_panel(const ReturnPanel& panel,
                          bool transform,
                          std::int64_t start = 1609459200,
                          std::int64_t step = 3600);

} // namespace pqvar::synth
