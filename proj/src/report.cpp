#include "pqvar/report.hpp"

#include "pqvar/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace pqvar {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v)
{
  if (!std::isfinite(v)) {
    return "";
  }
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::string num(const std::optional<double>& v)
{
  return v ? num(*v) : std::string();
}

json opt_json(const std::optional<double>& v)
{
  return v ? json(*v) : json(nullptr);
}

json finite_or_null(double v)
{
  return std::isfinite(v) ? json(v) : json(nullptr);
}

std::string xml_escape(const std::string& s)
{
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class BundleWriter
{
public:
  explicit BundleWriter(fs::path dir)
    : dir_(std::move(dir))
  {}

  std::ofstream open(const std::string& relative)
  {
    const fs::path p = dir_ / relative;
    fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) {
      throw DataError("cannot write " + p.string());
    }
    written_.push_back(relative);
    return out;
  }

  std::vector<std::string> written() const
  {
    auto w = written_;
    std::sort(w.begin(), w.end());
    return w;
  }

private:
  fs::path dir_;
  std::vector<std::string> written_;
};

json stats_to_json(const LayerReport& r)
{
  const auto& s = r.stats;
  return {{"name", r.name},
          {"scale", s.scale},
          {"links", s.links},
          {"self_links", r.self_links},
          {"cross_links", r.cross_links},
          {"mean_degree", s.mean_degree},
          {"sd_out", s.sd_out},
          {"sd_in", s.sd_in},
          {"rho_out_cap", opt_json(s.out_vs_cap.rho)},
          {"p_out_cap", opt_json(s.out_vs_cap.p_value)},
          {"stars_out_cap", significance_stars(s.out_vs_cap.p_value)},
          {"rho_in_cap", opt_json(s.in_vs_cap.rho)},
          {"p_in_cap", opt_json(s.in_vs_cap.p_value)},
          {"stars_in_cap", significance_stars(s.in_vs_cap.p_value)},
          {"p_down", opt_json(s.p_down)}};
}

json ccdf_to_json(const std::vector<CcdfPoint>& pts)
{
  json out = json::array();
  for (const auto& p : pts) {
    out.push_back({p.k, p.survival});
  }
  return out;
}

json stratum_to_json(const QigStratum& s)
{
  json edges = json::array();
  for (const auto& e : s.edges) {
    edges.push_back({{"layer", layer_name(e.layer)},
                     {"links", e.links},
                     {"possible", e.possible},
                     {"proportion", e.proportion},
                     {"positive_share", opt_json(e.positive_share)}});
  }
  json regions = json::object();
  json targets = json::object();
  for (std::size_t k = 0; k < 3; ++k) {
    regions[std::string(region_name(kRegions[k]))] = s.region_weight[k];
    targets[std::string(target_name(kTargets[k]))] = s.target_weight[k];
  }
  return {{"edges", edges}, {"region_weight", regions}, {"target_weight", targets}};
}

const char* kStatsHeader =
  "network,scale,links,self_links,cross_links,mean_degree,sd_out,sd_in,rho_out_cap,p_out_cap,"
  "stars_out_cap,rho_in_cap,p_in_cap,stars_in_cap,p_down";

void write_stats_row(std::ostream& out, const LayerReport& r)
{
  const auto& s = r.stats;
  out << r.name << ',' << num(s.scale) << ',' << s.links << ',' << r.self_links << ','
      << r.cross_links << ',' << num(s.mean_degree) << ',' << num(s.sd_out) << ','
      << num(s.sd_in) << ',' << num(s.out_vs_cap.rho) << ',' << num(s.out_vs_cap.p_value) << ','
      << significance_stars(s.out_vs_cap.p_value) << ',' << num(s.in_vs_cap.rho) << ','
      << num(s.in_vs_cap.p_value) << ',' << significance_stars(s.in_vs_cap.p_value) << ','
      << num(s.p_down) << '\n';
}

std::string layer_dot(const SubNetwork& net, const std::vector<std::string>& ids)
{
  std::ostringstream os;
  os << "digraph \"" << net.name << "\" {\n";
  for (const auto& id : ids) {
    os << "  \"" << id << "\";\n";
  }
  for (Eigen::Index i = 0; i < net.adj.rows(); ++i) {
    for (Eigen::Index j = 0; j < net.adj.cols(); ++j) {
      if (net.adj(i, j) == 0) {
        continue;
      }
      os << "  \"" << ids[static_cast<std::size_t>(i)] << "\" -> \""
         << ids[static_cast<std::size_t>(j)] << "\" [sign=" << net.sign(i, j)
         << ", t=" << num(net.t_vals(i, j)) << ", color=\""
         << (net.sign(i, j) > 0 ? "gold" : "purple") << "\"];\n";
    }
  }
  os << "}\n";
  return os.str();
}

std::string layer_graphml(const SubNetwork& net, const std::vector<std::string>& ids)
{
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
     << "  <key id=\"sign\" for=\"edge\" attr.name=\"sign\" attr.type=\"int\"/>\n"
     << "  <key id=\"t\" for=\"edge\" attr.name=\"t_value\" attr.type=\"double\"/>\n"
     << "  <graph id=\"" << xml_escape(net.name) << "\" edgedefault=\"directed\">\n";
  for (const auto& id : ids) {
    os << "    <node id=\"" << xml_escape(id) << "\"/>\n";
  }
  for (Eigen::Index i = 0; i < net.adj.rows(); ++i) {
    for (Eigen::Index j = 0; j < net.adj.cols(); ++j) {
      if (net.adj(i, j) == 0) {
        continue;
      }
      os << "    <edge source=\"" << xml_escape(ids[static_cast<std::size_t>(i)])
         << "\" target=\"" << xml_escape(ids[static_cast<std::size_t>(j)]) << "\">"
         << "<data key=\"sign\">" << net.sign(i, j) << "</data>"
         << "<data key=\"t\">" << num(net.t_vals(i, j)) << "</data></edge>\n";
    }
  }
  os << "  </graph>\n</graphml>\n";
  return os.str();
}

std::string region_node(Region r)
{
  return "in:" + std::string(region_name(r));
}

std::string target_node(Target t)
{
  return "out:" + std::string(target_name(t));
}

std::string qig_graphml(const QigStratum& s, const std::string& graph_name)
{
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
     << "  <key id=\"nw\" for=\"node\" attr.name=\"weight\" attr.type=\"double\"/>\n"
     << "  <key id=\"w\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n"
     << "  <key id=\"p\" for=\"edge\" attr.name=\"positive_share\" attr.type=\"double\"/>\n"
     << "  <graph id=\"" << xml_escape(graph_name) << "\" edgedefault=\"directed\">\n";
  for (std::size_t k = 0; k < 3; ++k) {
    os << "    <node id=\"" << region_node(kRegions[k]) << "\"><data key=\"nw\">"
       << num(s.region_weight[k]) << "</data></node>\n";
  }
  for (std::size_t k = 0; k < 3; ++k) {
    os << "    <node id=\"" << target_node(kTargets[k]) << "\"><data key=\"nw\">"
       << num(s.target_weight[k]) << "</data></node>\n";
  }
  for (const auto& e : s.edges) {
    if (e.links == 0) {
      continue;
    }
    os << "    <edge source=\"" << region_node(e.layer.region) << "\" target=\""
       << target_node(e.layer.target) << "\"><data key=\"w\">" << num(e.proportion)
       << "</data><data key=\"p\">" << num(e.positive_share) << "</data></edge>\n";
  }
  os << "  </graph>\n</graphml>\n";
  return os.str();
}

std::vector<std::string> split(const std::string& line)
{
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

bool parses_as_number(const std::string& s)
{
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Checks a CSV against an exact header. `numeric` lists columns that must be
// numbers (or empty when `allow_empty`).
void check_csv(const fs::path& path,
               const std::string& header,
               const std::set<std::string>& numeric,
               bool allow_empty,
               std::vector<std::string>& problems,
               std::vector<std::vector<std::string>>* rows_out = nullptr)
{
  std::ifstream in(path);
  if (!in) {
    problems.push_back(path.string() + ": missing");
    return;
  }
  std::string line;
  if (!std::getline(in, line) || line != header) {
    problems.push_back(path.string() + ": unexpected header");
    return;
  }
  const auto cols = split(header);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split(line);
    if (fields.size() != cols.size()) {
      problems.push_back(path.string() + ":" + std::to_string(line_no) + ": wrong field count");
      continue;
    }
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (!numeric.count(cols[c])) {
        continue;
      }
      if (fields[c].empty() ? !allow_empty : !parses_as_number(fields[c])) {
        problems.push_back(path.string() + ":" + std::to_string(line_no) + ": column " + cols[c] +
                           " is not numeric");
      }
    }
    if (rows_out) {
      rows_out->push_back(fields);
    }
  }
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

std::string safe_name(const std::string& name)
{
  std::string out;
  for (std::size_t k = 0; k < name.size(); ++k) {
    if (name.compare(k, 2, "->") == 0) {
      out += "_to_";
      ++k;
    } else if (std::isalnum(static_cast<unsigned char>(name[k])) || name[k] == '_') {
      out += name[k];
    } else {
      out += '_';
    }
  }
  return out;
}

std::string qig_dot(const QigStratum& s, const std::string& graph_name)
{
  std::ostringstream os;
  os << "digraph \"" << graph_name << "\" {\n  rankdir=LR;\n";
  for (std::size_t k = 0; k < 3; ++k) {
    os << "  \"" << region_node(kRegions[k]) << "\" [weight=" << num(s.region_weight[k]) << "];\n";
  }
  for (std::size_t k = 0; k < 3; ++k) {
    os << "  \"" << target_node(kTargets[k]) << "\" [weight=" << num(s.target_weight[k]) << "];\n";
  }
  for (const auto& e : s.edges) {
    if (e.links == 0) {
      continue;
    }
    os << "  \"" << region_node(e.layer.region) << "\" -> \"" << target_node(e.layer.target)
       << "\" [weight=" << num(e.proportion) << ", positive_share=" << num(e.positive_share)
       << "];\n";
  }
  os << "}\n";
  return os.str();
}

json report_to_json(const NetworkReport& r)
{
  json doc;
  doc["alpha"] = r.alpha;
  doc["critical_value"] = r.critical_value;
  json assets = json::array();
  for (std::size_t k = 0; k < r.asset_ids.size(); ++k) {
    assets.push_back({{"id", r.asset_ids[k]}, {"market_cap", r.caps[k]}});
  }
  doc["assets"] = assets;
  json layers = json::array();
  for (const auto& l : r.layers) {
    json entry = stats_to_json(l);
    entry["ccdf_out"] = ccdf_to_json(l.ccdf_out);
    entry["ccdf_in"] = ccdf_to_json(l.ccdf_in);
    layers.push_back(std::move(entry));
  }
  doc["layers"] = layers;
  doc["qig"] = {{"self", stratum_to_json(r.qig.self)}, {"cross", stratum_to_json(r.qig.cross)}};
  json comparison = json::array();
  for (const LayerReport* l : {&r.multigraph, &r.standard_var, &r.piecewise}) {
    json entry = stats_to_json(*l);
    entry["ccdf_out"] = ccdf_to_json(l->ccdf_out);
    entry["ccdf_in"] = ccdf_to_json(l->ccdf_in);
    comparison.push_back(std::move(entry));
  }
  doc["comparison"] = comparison;
  json dc_rho = json::array();
  for (Eigen::Index a = 0; a < r.degree_correlation.masked.rows(); ++a) {
    json row = json::array();
    for (Eigen::Index b = 0; b < r.degree_correlation.masked.cols(); ++b) {
      row.push_back(finite_or_null(r.degree_correlation.masked(a, b)));
    }
    dc_rho.push_back(row);
  }
  doc["degree_correlation"] = {{"labels", r.degree_correlation.labels},
                               {"level", r.degree_correlation.level},
                               {"significant_rho", dc_rho}};
  return doc;
}

std::vector<std::string> write_report(const fs::path& dir,
                                      const NetworkReport& report,
                                      const FitArtifact& artifact,
                                      int effect_grid_points)
{
  fs::create_directories(dir);
  BundleWriter w(dir);
  const auto& ids = report.asset_ids;

  w.open("report.json") << report_to_json(report).dump(1) << '\n';

  {
    auto out = w.open("table_layers.csv");
    out << kStatsHeader << '\n';
    for (const auto& l : report.layers) {
      write_stats_row(out, l);
    }
  }
  {
    auto out = w.open("table_comparison.csv");
    out << kStatsHeader << '\n';
    for (const LayerReport* l : {&report.multigraph, &report.standard_var, &report.piecewise}) {
      write_stats_row(out, *l);
    }
  }
  {
    auto out = w.open("qig.csv");
    out << "stratum,layer,links,possible,proportion,positive_share\n";
    for (const auto& [name, s] : {std::pair{"self", &report.qig.self}, {"cross", &report.qig.cross}}) {
      for (const auto& e : s->edges) {
        out << name << ',' << layer_name(e.layer) << ',' << e.links << ',' << e.possible << ','
            << num(e.proportion) << ',' << num(e.positive_share) << '\n';
      }
    }
  }
  {
    auto out = w.open("degree_correlation.csv");
    const auto& dc = report.degree_correlation;
    out << "degree";
    for (const auto& l : dc.labels) {
      out << ',' << l;
    }
    out << '\n';
    for (Eigen::Index a = 0; a < dc.masked.rows(); ++a) {
      out << dc.labels[static_cast<std::size_t>(a)];
      for (Eigen::Index b = 0; b < dc.masked.cols(); ++b) {
        out << ',' << num(dc.masked(a, b));
      }
      out << '\n';
    }
  }

  const LayerSet layers = threshold(artifact.pqvar, report.alpha);
  const SubNetwork baseline = threshold(artifact.baseline, report.alpha);
  {
    auto out = w.open("edges.csv");
    out << "source,target,layer,sign,t_value\n";
    auto emit = [&](const SubNetwork& net) {
      for (Eigen::Index i = 0; i < net.adj.rows(); ++i) {
        for (Eigen::Index j = 0; j < net.adj.cols(); ++j) {
          if (net.adj(i, j)) {
            out << ids[static_cast<std::size_t>(i)] << ',' << ids[static_cast<std::size_t>(j)]
                << ',' << net.name << ',' << net.sign(i, j) << ',' << num(net.t_vals(i, j))
                << '\n';
          }
        }
      }
    };
    for (const auto& net : layers) {
      emit(net);
    }
    emit(baseline);
  }

  auto write_ccdf = [&](const LayerReport& l) {
    for (const auto& [dir_name, pts] : {std::pair{"out", &l.ccdf_out}, {"in", &l.ccdf_in}}) {
      auto out = w.open("ccdf/" + safe_name(l.name) + "_" + dir_name + ".csv");
      out << "k,survival\n";
      for (const auto& p : *pts) {
        out << p.k << ',' << num(p.survival) << '\n';
      }
    }
  };
  for (const auto& l : report.layers) {
    write_ccdf(l);
  }
  write_ccdf(report.multigraph);
  write_ccdf(report.standard_var);
  write_ccdf(report.piecewise);

  for (const auto& net : layers) {
    w.open("networks/" + safe_name(net.name) + ".dot") << layer_dot(net, ids);
    w.open("networks/" + safe_name(net.name) + ".graphml") << layer_graphml(net, ids);
  }
  w.open("networks/standard_var.dot") << layer_dot(baseline, ids);
  w.open("networks/standard_var.graphml") << layer_graphml(baseline, ids);
  w.open("networks/qig_self.dot") << qig_dot(report.qig.self, "qig_self");
  w.open("networks/qig_cross.dot") << qig_dot(report.qig.cross, "qig_cross");
  w.open("networks/qig_self.graphml") << qig_graphml(report.qig.self, "qig_self");
  w.open("networks/qig_cross.graphml") << qig_graphml(report.qig.cross, "qig_cross");

  {
    // Predicted quantiles of each target over a grid of one source's lagged
    // value, all other lagged values held at zero.
    auto out = w.open("fitted_effects.csv");
    out << "source,target,x,q_low,median,q_high\n";
    const auto& fit = artifact.pqvar;
    const Eigen::Index n = fit.assets();
    const int points = std::max(effect_grid_points, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double lo = fit.breakpoints.lower(i);
      const double hi = fit.breakpoints.upper(i);
      const double span = hi - lo;
      for (int g = 0; g < points; ++g) {
        const double x = (lo - span) + 3.0 * span * g / (points - 1);
        Eigen::VectorXd lagged = Eigen::VectorXd::Zero(n);
        lagged(i) = x;
        const auto pred = predict_quantiles(fit, lagged);
        for (Eigen::Index j = 0; j < n; ++j) {
          out << ids[static_cast<std::size_t>(i)] << ',' << ids[static_cast<std::size_t>(j)] << ','
              << num(x) << ',' << num(pred[0](j)) << ',' << num(pred[1](j)) << ','
              << num(pred[2](j)) << '\n';
        }
      }
    }
  }
  return w.written();
}

std::vector<std::string> validate_report(const fs::path& dir)
{
  std::vector<std::string> problems;
  const std::set<std::string> stats_numeric{"scale",   "links",     "self_links", "cross_links",
                                            "mean_degree", "sd_out", "sd_in",    "rho_out_cap",
                                            "p_out_cap", "rho_in_cap", "p_in_cap", "p_down"};

  json doc;
  try {
    std::ifstream in(dir / "report.json");
    in >> doc;
    for (const char* key : {"alpha", "critical_value", "assets", "layers", "qig", "comparison",
                            "degree_correlation"}) {
      if (!doc.contains(key)) {
        problems.push_back("report.json: missing key " + std::string(key));
      }
    }
    if (doc.contains("layers") && doc["layers"].size() != kLayerCount) {
      problems.push_back("report.json: expected 9 layers");
    }
    if (doc.contains("qig")) {
      for (const char* s : {"self", "cross"}) {
        for (const auto& e : doc["qig"][s]["edges"]) {
          const double p = e["proportion"].get<double>();
          if (p < 0.0 || p > 1.0) {
            problems.push_back("report.json: QIG proportion outside [0,1]");
          }
        }
      }
    }
  } catch (const std::exception& e) {
    problems.push_back(std::string("report.json: ") + e.what());
  }

  std::vector<std::vector<std::string>> rows;
  check_csv(dir / "table_layers.csv", kStatsHeader, stats_numeric, true, problems, &rows);
  if (rows.size() != kLayerCount) {
    problems.push_back("table_layers.csv: expected 9 rows");
  }
  for (const auto& r : rows) {
    if (!r[14].empty()) {
      const double pd = std::stod(r[14]);
      if (pd < 0.0 || pd > 1.0) {
        problems.push_back("table_layers.csv: P(Down) outside [0,1]");
      }
    }
  }
  check_csv(dir / "table_comparison.csv", kStatsHeader, stats_numeric, true, problems);
  check_csv(dir / "qig.csv", "stratum,layer,links,possible,proportion,positive_share",
            {"links", "possible", "proportion", "positive_share"}, true, problems);
  check_csv(dir / "edges.csv", "source,target,layer,sign,t_value", {"sign", "t_value"}, false,
            problems);
  check_csv(dir / "fitted_effects.csv", "source,target,x,q_low,median,q_high",
            {"x", "q_low", "median", "q_high"}, true, problems);

  if (fs::exists(dir / "ccdf")) {
    for (const auto& entry : fs::directory_iterator(dir / "ccdf")) {
      std::vector<std::vector<std::string>> pts;
      check_csv(entry.path(), "k,survival", {"k", "survival"}, false, problems, &pts);
      double prev = 1.0;
      for (std::size_t k = 0; k < pts.size(); ++k) {
        const double s = std::stod(pts[k][1]);
        if (s > prev + 1e-12 || (k == 0 && (pts[k][0] != "0" || s != 1.0))) {
          problems.push_back(entry.path().string() + ": survival not monotone from 1");
          break;
        }
        prev = s;
      }
    }
  } else {
    problems.push_back("ccdf/: missing");
  }

  if (fs::exists(dir / "networks")) {
    for (const auto& entry : fs::directory_iterator(dir / "networks")) {
      const auto text = slurp(entry.path());
      if (entry.path().extension() == ".dot") {
        if (text.rfind("digraph ", 0) != 0 || text.find("}\n") == std::string::npos) {
          problems.push_back(entry.path().string() + ": malformed DOT");
        }
      } else if (entry.path().extension() == ".graphml") {
        if (text.find("<graphml") == std::string::npos ||
            text.find("</graphml>") == std::string::npos) {
          problems.push_back(entry.path().string() + ": malformed GraphML");
        }
      }
    }
  } else {
    problems.push_back("networks/: missing");
  }
  return problems;
}

} // namespace pqvar
