#include "pqvar/ingest.hpp"

#include "pqvar/errors.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

namespace pqvar {

namespace {

std::string_view trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_csv_line(std::string_view line)
{
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

bool is_missing_token(std::string_view s)
{
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "null";
}

bool parse_double(std::string_view s, double& out)
{
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

template <typename Int>
bool parse_int(std::string_view s, Int& out)
{
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::ifstream open_or_throw(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  return in;
}

std::map<std::string, double> load_caps(const std::filesystem::path& caps_path)
{
  auto in = open_or_throw(caps_path);
  std::map<std::string, double> caps;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto fields = split_csv_line(line);
    if (line_no == 1) {
      if (fields.size() != 2) {
        throw DataError(caps_path.string() + ": expected header id,market_cap_usd");
      }
      continue;
    }
    if (fields.size() != 2) {
      throw DataError(caps_path.string() + ":" + std::to_string(line_no) + ": expected 2 fields");
    }
    double cap = 0.0;
    if (!parse_double(fields[1], cap) || !std::isfinite(cap) || cap < 0.0) {
      throw DataError(caps_path.string() + ":" + std::to_string(line_no) +
                      ": market cap must be a nonnegative number");
    }
    caps[std::string(fields[0])] = cap;
  }
  return caps;
}

} // namespace

std::int64_t parse_timestamp(std::string_view text)
{
  text = trim(text);
  std::int64_t epoch = 0;
  if (parse_int(text, epoch)) {
    return epoch;
  }
  double epoch_f = 0.0;
  if (parse_double(text, epoch_f) && std::isfinite(epoch_f)) {
    return static_cast<std::int64_t>(std::llround(epoch_f));
  }

  // YYYY-MM-DD[T ]HH:MM:SS[.fff](Z|±HH:MM)
  auto fail = [&]() -> std::int64_t {
    throw DataError("unparseable timestamp '" + std::string(text) + "'");
  };
  if (text.size() < 19 || text[4] != '-' || text[7] != '-' ||
      (text[10] != 'T' && text[10] != 't' && text[10] != ' ') || text[13] != ':' ||
      text[16] != ':') {
    return fail();
  }
  int year = 0;
  unsigned month = 0, day = 0;
  int hour = 0, minute = 0, second = 0;
  if (!parse_int(text.substr(0, 4), year) || !parse_int(text.substr(5, 2), month) ||
      !parse_int(text.substr(8, 2), day) || !parse_int(text.substr(11, 2), hour) ||
      !parse_int(text.substr(14, 2), minute) || !parse_int(text.substr(17, 2), second)) {
    return fail();
  }
  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      ++pos;
    }
  }
  int offset_seconds = 0;
  if (pos == text.size()) {
    // no zone designator: treated as UTC
  } else if (text[pos] == 'Z' || text[pos] == 'z') {
    if (pos + 1 != text.size()) {
      return fail();
    }
  } else if ((text[pos] == '+' || text[pos] == '-') && text.size() == pos + 6 &&
             text[pos + 3] == ':') {
    int oh = 0, om = 0;
    if (!parse_int(text.substr(pos + 1, 2), oh) || !parse_int(text.substr(pos + 4, 2), om)) {
      return fail();
    }
    offset_seconds = (oh * 3600 + om * 60) * (text[pos] == '-' ? -1 : 1);
  } else {
    return fail();
  }

  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                           std::chrono::day{day}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) {
    return fail();
  }
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days_since_epoch) * 86400 + hour * 3600 + minute * 60 +
         second - offset_seconds;
}

PricePanel load_prices(const std::filesystem::path& prices_path,
                       const std::filesystem::path& caps_path,
                       std::vector<std::string>* warnings)
{
  auto warn = [&](std::string msg) {
    if (warnings) {
      warnings->push_back(std::move(msg));
    }
  };

  const auto caps = load_caps(caps_path);
  auto in = open_or_throw(prices_path);

  std::string line;
  std::vector<std::string> ids;
  std::vector<std::int64_t> timestamps;
  std::vector<std::vector<double>> columns;
  std::size_t line_no = 0;
  const double missing = std::numeric_limits<double>::quiet_NaN();

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto fields = split_csv_line(line);
    if (ids.empty()) {
      if (fields.size() < 2) {
        throw DataError(prices_path.string() + ": header needs a timestamp and asset columns");
      }
      std::unordered_set<std::string> seen;
      for (std::size_t k = 1; k < fields.size(); ++k) {
        std::string id(fields[k]);
        if (id.empty()) {
          throw DataError(prices_path.string() + ": empty asset id in header");
        }
        if (!seen.insert(id).second) {
          throw DataError(prices_path.string() + ": duplicate asset id '" + id + "'");
        }
        ids.push_back(std::move(id));
      }
      columns.resize(ids.size());
      continue;
    }
    if (fields.size() != ids.size() + 1) {
      throw DataError(prices_path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(ids.size() + 1) + " fields, got " +
                      std::to_string(fields.size()));
    }
    timestamps.push_back(parse_timestamp(fields[0]));
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const auto cell = fields[k + 1];
      double value = missing;
      if (!is_missing_token(cell) && !parse_double(cell, value)) {
        throw DataError(prices_path.string() + ":" + std::to_string(line_no) +
                        ": cannot parse price '" + std::string(cell) + "'");
      }
      columns[k].push_back(value);
    }
  }

  if (ids.empty()) {
    throw DataError(prices_path.string() + ": empty price file");
  }
  if (timestamps.size() < 3) {
    throw DataError("fewer than 3 timestamps");
  }
  for (std::size_t t = 1; t < timestamps.size(); ++t) {
    if (timestamps[t] <= timestamps[t - 1]) {
      throw DataError("timestamps must be strictly increasing");
    }
    if (timestamps[t] - timestamps[t - 1] != timestamps[1] - timestamps[0]) {
      throw DataError("timestamps must be uniformly spaced");
    }
  }

  std::vector<std::size_t> kept;
  std::vector<Asset> assets;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto cap = caps.find(ids[k]);
    if (cap == caps.end()) {
      warn("dropping asset '" + ids[k] + "': no market cap");
      continue;
    }
    const bool complete = std::all_of(columns[k].begin(), columns[k].end(), [](double p) {
      return std::isfinite(p) && p > 0.0;
    });
    if (!complete) {
      warn("dropping asset '" + ids[k] + "': missing or nonpositive prices");
      continue;
    }
    kept.push_back(k);
    assets.push_back({ids[k], cap->second});
  }
  if (kept.size() < 2) {
    throw DataError("fewer than 2 surviving assets");
  }

  PricePanel panel;
  panel.timestamps = std::move(timestamps);
  panel.assets = std::move(assets);
  panel.prices.resize(static_cast<Eigen::Index>(panel.timestamps.size()),
                      static_cast<Eigen::Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    for (std::size_t t = 0; t < panel.timestamps.size(); ++t) {
      panel.prices(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) =
        columns[kept[c]][t];
    }
  }
  return panel;
}

Eigen::MatrixXd log_returns(const PricePanel& panel)
{
  const auto& p = panel.prices;
  if (p.rows() < 2) {
    throw DataError("need at least 2 prices to form returns");
  }
  const Eigen::Index n = p.rows() - 1;
  return 100.0 * (p.bottomRows(n).array() / p.topRows(n).array()).log().matrix();
}

double stabilize(double y)
{
  if (!std::isfinite(y)) {
    throw std::domain_error("stabilize: non-finite input");
  }
  return std::copysign(std::log1p(std::fabs(y)), y);
}

double destabilize(double s)
{
  return std::copysign(std::expm1(std::fabs(s)), s);
}

ReturnPanel make_return_panel(const PricePanel& panel, bool apply_transform)
{
  ReturnPanel out;
  out.returns = log_returns(panel);
  if (apply_transform) {
    out.returns = out.returns.unaryExpr([](double y) { return stabilize(y); });
  }
  out.assets = panel.assets;
  out.transform_applied = apply_transform;
  for (Eigen::Index j = 0; j < out.returns.cols(); ++j) {
    const auto col = out.returns.col(j);
    if (col.maxCoeff() == col.minCoeff()) {
      throw DataError("asset '" + out.assets[static_cast<std::size_t>(j)].id +
                      "' has zero return variance");
    }
  }
  return out;
}

void write_prices_csv(const std::filesystem::path& path, const PricePanel& panel)
{
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << "timestamp";
  for (const auto& a : panel.assets) {
    out << ',' << a.id;
  }
  out << '\n' << std::setprecision(17);
  for (Eigen::Index t = 0; t < panel.prices.rows(); ++t) {
    out << panel.timestamps[static_cast<std::size_t>(t)];
    for (Eigen::Index j = 0; j < panel.prices.cols(); ++j) {
      out << ',' << panel.prices(t, j);
    }
    out << '\n';
  }
}

void write_caps_csv(const std::filesystem::path& path, const std::vector<Asset>& assets)
{
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << "id,market_cap_usd\n" << std::setprecision(17);
  for (const auto& a : assets) {
    out << a.id << ',' << a.market_cap << '\n';
  }
}

} // namespace pqvar
