#pragma once

#include "pqvar/ingest.hpp"
#include "pqvar/model.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pqvar {

inline constexpr std::string_view kArtifactFormat = "pqvar-fit/1";

//! Everything `analyze` needs without refitting.
struct FitArtifact
{
  std::vector<Asset> assets;
  PqvarFit pqvar;
  StandardVarFit baseline;
  double alpha = 0.001;
  nlohmann::json config = nlohmann::json::object();
  std::string fingerprint;
};

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
nlohmann::json matrix_to_json(const Eigen::MatrixXi& m);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FitArtifact& artifact);

//! Throws DataError for a missing or incompatible format tag or a malformed body.
FitArtifact from_json(const nlohmann::json& doc);

void write_artifact(const std::filesystem::path& path, const FitArtifact& artifact);
FitArtifact read_artifact(const std::filesystem::path& path);

//! 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view data);
std::string file_fingerprint(const std::filesystem::path& path);

} // namespace pqvar
