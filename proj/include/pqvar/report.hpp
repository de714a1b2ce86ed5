#pragma once

#include "pqvar/artifact.hpp"
#include "pqvar/netstats.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace pqvar {

nlohmann::json report_to_json(const NetworkReport& report);

//! Writes the full analysis bundle into `dir`:
//!   report.json, table_layers.csv, table_comparison.csv, qig.csv,
//!   degree_correlation.csv, edges.csv, fitted_effects.csv,
//!   ccdf/<network>_<out|in>.csv, networks/<layer>.{dot,graphml},
//!   networks/qig_<self|cross>.{dot,graphml}.
//! Returns the written paths relative to `dir`, sorted.
std::vector<std::string> write_report(const std::filesystem::path& dir,
                                      const NetworkReport& report,
                                      const FitArtifact& artifact,
                                      int effect_grid_points = 41);

//! Re-reads every file in the bundle and checks its schema. Returns one
//! message per problem; empty when everything validates.
std::vector<std::string> validate_report(const std::filesystem::path& dir);

//! File-system safe form of a network name ("linear->median" → "linear_to_median").
std::string safe_name(const std::string& name);

std::string qig_dot(const QigStratum& stratum, const std::string& graph_name);

} // namespace pqvar
