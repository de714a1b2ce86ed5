#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace pqvar {

//! Input region of a lagged covariate in the 3-knot embedding.
enum class Region { kLower = 0, kLinear = 1, kUpper = 2 };

//! Target quantile of a regression.
enum class Target { kLowerTail = 0, kMedian = 1, kUpperTail = 2 };

inline constexpr std::array<Region, 3> kRegions{Region::kLower, Region::kLinear, Region::kUpper};
inline constexpr std::array<Target, 3> kTargets{Target::kLowerTail, Target::kMedian,
                                                Target::kUpperTail};
inline constexpr std::size_t kLayerCount = 9;

//! One of the nine (input region → target quantile) sub-networks.
struct Layer
{
  Region region = Region::kLinear;
  Target target = Target::kMedian;

  //! Row-major over (region, target): lower→q_low is 0, upper→q_high is 8.
  constexpr std::size_t index() const
  {
    return static_cast<std::size_t>(region) * 3 + static_cast<std::size_t>(target);
  }
  static constexpr Layer from_index(std::size_t i)
  {
    return {static_cast<Region>(i / 3), static_cast<Target>(i % 3)};
  }
  friend constexpr bool operator==(Layer, Layer) = default;
};

inline constexpr std::string_view region_name(Region r)
{
  switch (r) {
    case Region::kLower: return "lower";
    case Region::kLinear: return "linear";
    case Region::kUpper: return "upper";
  }
  return "?";
}

inline constexpr std::string_view target_name(Target t)
{
  switch (t) {
    case Target::kLowerTail: return "q_low";
    case Target::kMedian: return "median";
    case Target::kUpperTail: return "q_high";
  }
  return "?";
}

//! "linear->median" style identifier used in every export.
inline std::string layer_name(Layer layer)
{
  return std::string(region_name(layer.region)) + "->" + std::string(target_name(layer.target));
}

inline std::optional<Layer> parse_layer_name(std::string_view name)
{
  for (std::size_t i = 0; i < kLayerCount; ++i) {
    if (layer_name(Layer::from_index(i)) == name) {
      return Layer::from_index(i);
    }
  }
  return std::nullopt;
}

} // namespace pqvar
