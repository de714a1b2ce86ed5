#include "pqvar/artifact.hpp"

#include "pqvar/errors.hpp"
#include "pqvar/netstats.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace pqvar {

namespace {

using nlohmann::json;

double number_or_nan(const json& v)
{
  if (v.is_null()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (!v.is_number()) {
    throw DataError("artifact: expected a number");
  }
  return v.get<double>();
}

json failures_to_json(const std::vector<AssetFailure>& failures)
{
  json out = json::array();
  for (const auto& f : failures) {
    out.push_back({{"asset", f.asset}, {"message", f.message}});
  }
  return out;
}

std::vector<AssetFailure> failures_from_json(const json& j)
{
  std::vector<AssetFailure> out;
  for (const auto& f : j) {
    out.push_back({f.at("asset").get<int>(), f.at("message").get<std::string>()});
  }
  return out;
}

std::string_view method_name(StandardVarMethod m)
{
  return m == StandardVarMethod::kLeastSquares ? "least_squares" : "median_quantile";
}

} // namespace

json matrix_to_json(const Eigen::MatrixXd& m)
{
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      row.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json matrix_to_json(const Eigen::MatrixXi& m)
{
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v)
{
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(std::isfinite(v(i)) ? json(v(i)) : json(nullptr));
  }
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j)
{
  if (!j.is_array()) {
    throw DataError("artifact: expected a matrix");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw DataError("artifact: ragged matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = number_or_nan(row[static_cast<std::size_t>(c)]);
    }
  }
  return m;
}

Eigen::VectorXd vector_from_json(const json& j)
{
  if (!j.is_array()) {
    throw DataError("artifact: expected a vector");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    v(static_cast<Eigen::Index>(k)) = number_or_nan(j[k]);
  }
  return v;
}

json to_json(const FitArtifact& a)
{
  json doc;
  doc["format"] = kArtifactFormat;
  doc["fingerprint"] = a.fingerprint;
  doc["config"] = a.config;
  doc["alpha"] = a.alpha;

  json assets = json::array();
  for (const auto& asset : a.assets) {
    assets.push_back({{"id", asset.id}, {"market_cap", asset.market_cap}});
  }
  doc["assets"] = std::move(assets);

  const auto& f = a.pqvar;
  doc["quantiles"] = {f.quantiles[0], f.quantiles[1], f.quantiles[2]};
  doc["breakpoints"] = {{"lower_q", f.breakpoints.lower_q},
                        {"upper_q", f.breakpoints.upper_q},
                        {"lower", vector_to_json(f.breakpoints.lower)},
                        {"upper", vector_to_json(f.breakpoints.upper)}};
  json layers = json::object();
  const auto nets = threshold(f, a.alpha);
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    layers[layer_name(Layer::from_index(l))] = {{"coef", matrix_to_json(f.coef[l])},
                                                {"t", matrix_to_json(f.t_vals[l])},
                                                {"sign", matrix_to_json(nets[l].sign)}};
  }
  doc["layers"] = std::move(layers);
  json intercepts = json::object();
  for (Target t : kTargets) {
    intercepts[std::string(target_name(t))] =
      vector_to_json(f.intercepts[static_cast<std::size_t>(t)]);
  }
  doc["intercepts"] = std::move(intercepts);
  doc["failures"] = failures_to_json(f.failures);
  doc["floored_variances"] = f.floored_variances;

  const auto& b = a.baseline;
  doc["standard_var"] = {{"method", method_name(b.method)},
                         {"coef", matrix_to_json(b.A)},
                         {"t", matrix_to_json(b.T_vals)},
                         {"sign", matrix_to_json(threshold(b, a.alpha).sign)},
                         {"intercepts", vector_to_json(b.intercepts)},
                         {"sigma_eps", matrix_to_json(b.Sigma_eps)},
                         {"gamma", matrix_to_json(b.Gamma)},
                         {"failures", failures_to_json(b.failures)}};
  return doc;
}

FitArtifact from_json(const json& doc)
{
  if (!doc.is_object() || !doc.contains("format")) {
    throw DataError("artifact: missing format tag");
  }
  const auto format = doc["format"].get<std::string>();
  if (format != kArtifactFormat) {
    throw DataError("artifact: incompatible format '" + format + "', expected '" +
                    std::string(kArtifactFormat) + "'");
  }
  try {
    FitArtifact a;
    a.fingerprint = doc.at("fingerprint").get<std::string>();
    a.config = doc.at("config");
    a.alpha = doc.at("alpha").get<double>();
    for (const auto& asset : doc.at("assets")) {
      a.assets.push_back({asset.at("id").get<std::string>(), asset.at("market_cap").get<double>()});
    }
    const auto n = static_cast<Eigen::Index>(a.assets.size());

    auto& f = a.pqvar;
    const auto& q = doc.at("quantiles");
    f.quantiles = {q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>()};
    const auto& bp = doc.at("breakpoints");
    f.breakpoints.lower_q = bp.at("lower_q").get<double>();
    f.breakpoints.upper_q = bp.at("upper_q").get<double>();
    f.breakpoints.lower = vector_from_json(bp.at("lower"));
    f.breakpoints.upper = vector_from_json(bp.at("upper"));
    for (std::size_t l = 0; l < kLayerCount; ++l) {
      const auto& layer = doc.at("layers").at(layer_name(Layer::from_index(l)));
      f.coef[l] = matrix_from_json(layer.at("coef"));
      f.t_vals[l] = matrix_from_json(layer.at("t"));
      if (f.coef[l].rows() != n || f.coef[l].cols() != n || f.t_vals[l].rows() != n ||
          f.t_vals[l].cols() != n) {
        throw DataError("artifact: layer matrices do not match the asset count");
      }
    }
    for (Target t : kTargets) {
      f.intercepts[static_cast<std::size_t>(t)] =
        vector_from_json(doc.at("intercepts").at(std::string(target_name(t))));
    }
    f.failures = failures_from_json(doc.at("failures"));
    f.floored_variances = doc.at("floored_variances").get<int>();

    const auto& s = doc.at("standard_var");
    auto& b = a.baseline;
    b.method = s.at("method").get<std::string>() == "least_squares"
                 ? StandardVarMethod::kLeastSquares
                 : StandardVarMethod::kMedianQuantile;
    b.A = matrix_from_json(s.at("coef"));
    b.T_vals = matrix_from_json(s.at("t"));
    b.intercepts = vector_from_json(s.at("intercepts"));
    b.Sigma_eps = matrix_from_json(s.at("sigma_eps"));
    b.Gamma = matrix_from_json(s.at("gamma"));
    b.failures = failures_from_json(s.at("failures"));
    if (b.A.rows() != n || b.T_vals.rows() != n) {
      throw DataError("artifact: standard VAR does not match the asset count");
    }
    return a;
  } catch (const json::exception& e) {
    throw DataError(std::string("artifact: malformed body: ") + e.what());
  }
}

void write_artifact(const std::filesystem::path& path, const FitArtifact& artifact)
{
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << to_json(artifact).dump(1) << '\n';
}

FitArtifact read_artifact(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open artifact " + path.string());
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("artifact " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

std::string fnv1a_hex(std::string_view data)
{
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string file_fingerprint(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

} // namespace pqvar
