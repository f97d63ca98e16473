#include "opidyn/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace opidyn {

namespace {

using nlohmann::json;

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

// 17 significant digits round-trip any finite double exactly
std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

Network read_network(const std::string& path, std::optional<int> n_users) {
  std::ifstream in = open_in(path);
  std::vector<std::pair<int, int>> edges;
  int max_id = -1;
  std::optional<int> header_users;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos) {
      // "# users <n>" header lets an edge list carry isolated trailing ids
      std::istringstream hs(line.substr(pos + 1));
      std::string key;
      int val;
      if (hs >> key >> val && key == "users") header_users = val;
      line.erase(pos);
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    int u, v;
    std::string tail;
    if (!(ls >> u >> v) || (ls >> tail))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected \"follower followee\"");
    edges.emplace_back(u, v);
    max_id = std::max({max_id, u, v});
  }
  const int n = n_users.value_or(header_users.value_or(max_id + 1));
  return Network(n, std::move(edges));
}

void write_network(const Network& net, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "# users " << net.n_users() << "\n";
  for (int u = 0; u < net.n_users(); ++u)
    for (int v : net.followees(u)) out << u << " " << v << "\n";
  if (!out) throw std::runtime_error("short write to " + path);
}

EventLog read_event_log(const std::string& path,
                        std::optional<double> horizon) {
  std::ifstream in = open_in(path);
  EventLog log;
  std::string line;
  std::size_t lineno = 0;
  std::size_t perturbed = 0;
  double prev = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& ex) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               ex.what());
    }
    if (!j.contains("t") || !j.contains("u") || !j.contains("m"))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": event needs fields t, u, m");
    Event e{j.at("t").get<double>(), j.at("u").get<int>(),
            j.at("m").get<double>()};
    if (!std::isfinite(e.t) || !std::isfinite(e.m))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": non-finite event field");
    if (e.t < prev)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": event times must be ascending");
    if (e.t <= prev) {
      // simultaneous posts break the one-at-a-time point process; keep both
      // by nudging the later one forward
      e.t = prev + 1e-9;
      ++perturbed;
    }
    prev = e.t;
    log.events.push_back(e);
  }
  if (perturbed > 0)
    std::cerr << "warning: " << path << ": perturbed " << perturbed
              << " tied timestamp(s) forward by 1e-9 s\n";
  if (horizon) {
    log.horizon = *horizon;
    if (!log.events.empty() && log.events.back().t >= *horizon)
      throw std::runtime_error(path + ": events extend past the horizon");
  } else {
    log.horizon = log.events.empty()
                      ? 0.0
                      : std::nextafter(log.events.back().t,
                                       std::numeric_limits<double>::max());
  }
  return log;
}

void write_event_log(const EventLog& log, const std::string& path) {
  std::ofstream out = open_out(path);
  for (const Event& e : log.events)
    out << "{\"t\":" << fmt(e.t) << ",\"u\":" << e.u << ",\"m\":" << fmt(e.m)
        << "}\n";
  if (!out) throw std::runtime_error("short write to " + path);
}

ModelParams read_params(const std::string& path) {
  std::ifstream in = open_in(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw std::runtime_error(path + ": " + ex.what());
  }
  ModelParams p;
  try {
    p.omega = j.at("omega").get<double>();
    p.nu = j.at("nu").get<double>();
    const auto alpha = j.at("alpha").get<std::vector<double>>();
    const auto mu = j.at("mu").get<std::vector<double>>();
    const auto sigma = j.at("sigma").get<std::vector<double>>();
    const int n = static_cast<int>(alpha.size());
    if (static_cast<int>(mu.size()) != n || static_cast<int>(sigma.size()) != n)
      throw std::runtime_error("alpha, mu, sigma lengths differ");
    p.alpha = Eigen::Map<const Vec>(alpha.data(), n);
    p.mu = Eigen::Map<const Vec>(mu.data(), n);
    p.sigma = Eigen::Map<const Vec>(sigma.data(), n);
    const auto load = [&](const char* key) {
      std::vector<Eigen::Triplet<double>> trip;
      for (const auto& row : j.at(key)) {
        if (!row.is_array() || row.size() != 3)
          throw std::runtime_error(std::string(key) +
                                   " entries must be [u, v, value]");
        const int u = row[0].get<int>();
        const int v = row[1].get<int>();
        if (u < 0 || u >= n || v < 0 || v >= n)
          throw std::runtime_error(std::string(key) + " index out of range");
        trip.emplace_back(u, v, row[2].get<double>());
      }
      SparseMat m(n, n);
      m.setFromTriplets(trip.begin(), trip.end());
      return m;
    };
    p.A = load("A");
    p.B = load("B");
  } catch (const json::exception& ex) {
    throw std::runtime_error(path + ": " + ex.what());
  }
  return p;
}

void write_params(const ModelParams& p, const std::string& path) {
  std::ofstream out = open_out(path);
  const auto vec = [&](const Vec& v) {
    std::string s = "[";
    for (int i = 0; i < v.size(); ++i) {
      if (i) s += ",";
      s += fmt(v[i]);
    }
    return s + "]";
  };
  const auto mat = [&](const SparseMat& m) {
    // receiver-first triplets, ordered by (receiver, poster)
    std::vector<std::tuple<int, int, double>> rows;
    for (int v = 0; v < m.outerSize(); ++v)
      for (SparseMat::InnerIterator it(m, v); it; ++it)
        rows.emplace_back(static_cast<int>(it.row()), v, it.value());
    std::sort(rows.begin(), rows.end());
    std::string s = "[";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i) s += ",";
      auto [u, v, val] = rows[i];
      s += "[" + std::to_string(u) + "," + std::to_string(v) + "," + fmt(val) +
           "]";
    }
    return s + "]";
  };
  out << "{\n"
      << "  \"omega\": " << fmt(p.omega) << ",\n"
      << "  \"nu\": " << fmt(p.nu) << ",\n"
      << "  \"alpha\": " << vec(p.alpha) << ",\n"
      << "  \"mu\": " << vec(p.mu) << ",\n"
      << "  \"sigma\": " << vec(p.sigma) << ",\n"
      << "  \"A\": " << mat(p.A) << ",\n"
      << "  \"B\": " << mat(p.B) << "\n"
      << "}\n";
  if (!out) throw std::runtime_error("short write to " + path);
}

void write_plot_data(std::vector<SeriesPoint> points, const std::string& path) {
  std::sort(points.begin(), points.end(),
            [](const SeriesPoint& a, const SeriesPoint& b) {
              return std::tie(a.series, a.t) < std::tie(b.series, b.t);
            });
  std::ofstream out = open_out(path);
  out << "t,series_id,value\n";
  for (const auto& pt : points)
    out << fmt(pt.t) << "," << pt.series << "," << fmt(pt.value) << "\n";
  if (!out) throw std::runtime_error("short write to " + path);
}

std::vector<SeriesPoint> running_average(const EventLog& log, double window,
                                         const std::string& series) {
  if (!(window > 0))
    throw std::invalid_argument("running average: window must be positive");
  std::vector<SeriesPoint> out;
  out.reserve(log.size());
  std::size_t lo = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    sum += log.events[i].m;
    while (log.events[lo].t <= log.events[i].t - window) {
      sum -= log.events[lo].m;
      ++lo;
    }
    out.push_back(
        {log.events[i].t, series, sum / static_cast<double>(i - lo + 1)});
  }
  return out;
}

double parse_duration(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty duration");
  double scale = 1.0;
  std::string body = text;
  switch (text.back()) {
    case 's': scale = 1.0; body.pop_back(); break;
    case 'm': scale = 60.0; body.pop_back(); break;
    case 'h': scale = 3600.0; body.pop_back(); break;
    default:
      if (!std::isdigit(static_cast<unsigned char>(text.back())) &&
          text.back() != '.')
        throw std::invalid_argument("bad duration suffix in \"" + text + "\"");
  }
  std::size_t used = 0;
  double value;
  try {
    value = std::stod(body, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse duration \"" + text + "\"");
  }
  if (used != body.size() || !std::isfinite(value) || value < 0)
    throw std::invalid_argument("cannot parse duration \"" + text + "\"");
  return value * scale;
}

}  // namespace opidyn
