#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pqvar {

struct Asset
{
  std::string id;
  double market_cap = 0.0; // USD, static snapshot
};

//! Aligned T×N price matrix. Prices are strictly positive, timestamps are
//! strictly increasing with uniform spacing, asset ids are unique.
struct PricePanel
{
  std::vector<std::int64_t> timestamps; // epoch seconds
  Eigen::MatrixXd prices;
  std::vector<Asset> assets;
};

//! (T−1)×N matrix of (optionally stabilized) percentage log-returns.
struct ReturnPanel
{
  Eigen::MatrixXd returns;
  std::vector<Asset> assets;
  bool transform_applied = false;

  Eigen::Index rows() const { return returns.rows(); }
  Eigen::Index assets_count() const { return returns.cols(); }
};

//! Loads `timestamp,<id1>,<id2>,...` prices and `id,market_cap_usd` caps.
//! Assets with gaps, nonpositive prices or no market cap are dropped; a
//! message for each drop is appended to `warnings` when provided.
//! Throws DataError on parse failures, on fewer than 2 surviving assets and
//! on fewer than 3 timestamps.
PricePanel load_prices(const std::filesystem::path& prices_path,
                       const std::filesystem::path& caps_path,
                       std::vector<std::string>* warnings = nullptr);

//! Parses an epoch-seconds or RFC-3339 timestamp.
std::int64_t parse_timestamp(std::string_view text);

//! y_t = 100·log(p_t / p_{t−1}) per column.
Eigen::MatrixXd log_returns(const PricePanel& panel);

//! sign(y)·log(|y| + 1). Throws std::domain_error on non-finite input.
double stabilize(double y);

//! Inverse of stabilize: sign(s)·(exp(|s|) − 1).
double destabilize(double s);

//! log_returns followed by the elementwise stabilizing transform (when
//! `apply_transform`). Throws DataError when a column has zero variance.
ReturnPanel make_return_panel(const PricePanel& panel, bool apply_transform = true);

void write_prices_csv(const std::filesystem::path& path, const PricePanel& panel);
void write_caps_csv(const std::filesystem::path& path, const std::vector<Asset>& assets);

} // namespace pqvar
