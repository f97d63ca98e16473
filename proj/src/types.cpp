#include "opidyn/types.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace opidyn {

Network::Network(int n_users, std::vector<std::pair<int, int>> edges)
    : n_users_(n_users) {
  if (n_users < 0) throw std::invalid_argument("network: negative user count");
  followees_.resize(n_users);
  followers_.resize(n_users);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (auto [u, v] : edges) {
    if (u < 0 || u >= n_users || v < 0 || v >= n_users)
      throw std::invalid_argument("network: edge (" + std::to_string(u) + ", " +
                                  std::to_string(v) + ") out of range");
    if (u == v)
      throw std::invalid_argument("network: self-edge at user " +
                                  std::to_string(u));
    followees_[u].push_back(v);
    followers_[v].push_back(u);
  }
  for (auto& f : followers_) std::sort(f.begin(), f.end());
  n_edges_ = edges.size();
  edges_ = std::move(edges);
}

bool Network::has_edge(int follower, int followee) const {
  if (follower < 0 || follower >= n_users_) return false;
  const auto& f = followees_[follower];
  return std::binary_search(f.begin(), f.end(), followee);
}

void EventLog::validate(int n_users) const {
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (!std::isfinite(e.t) || !std::isfinite(e.m))
      throw std::invalid_argument("event log: non-finite field at index " +
                                  std::to_string(i));
    if (e.t < 0)
      throw std::invalid_argument("event log: negative time at index " +
                                  std::to_string(i));
    if (e.t <= prev)
      throw std::invalid_argument(
          "event log: times not strictly increasing at index " +
          std::to_string(i));
    if (e.u < 0 || e.u >= n_users)
      throw std::invalid_argument("event log: unknown user " +
                                  std::to_string(e.u) + " at index " +
                                  std::to_string(i));
    if (e.t >= horizon)
      throw std::invalid_argument("event log: time at index " +
                                  std::to_string(i) + " exceeds horizon");
    prev = e.t;
  }
}

namespace {

void check_pattern(const SparseMat& m, const Network& net, bool allow_diag,
                   bool require_nonneg, const char* name) {
  if (m.rows() != net.n_users() || m.cols() != net.n_users())
    throw std::invalid_argument(std::string("params: ") + name +
                                " has wrong dimensions");
  for (int v = 0; v < m.outerSize(); ++v) {
    for (SparseMat::InnerIterator it(m, v); it; ++it) {
      const int u = static_cast<int>(it.row());
      if (!std::isfinite(it.value()))
        throw std::invalid_argument(std::string("params: non-finite entry in ") +
                                    name);
      if (require_nonneg && it.value() < 0)
        throw std::invalid_argument(std::string("params: negative entry in ") +
                                    name);
      if (u == v) {
        if (!allow_diag && it.value() != 0)
          throw std::invalid_argument(std::string("params: ") + name + "(" +
                                      std::to_string(u) +
                                      ") diagonal entry not allowed");
        continue;
      }
      if (it.value() != 0 && !net.has_edge(u, v))
        throw std::invalid_argument(
            std::string("params: ") + name + "(" + std::to_string(u) + ", " +
            std::to_string(v) + ") set but user does not follow the poster");
    }
  }
}

}  // namespace

void ModelParams::validate(const Network& net) const {
  const int n = net.n_users();
  if (alpha.size() != n || mu.size() != n || sigma.size() != n)
    throw std::invalid_argument("params: vector length != user count");
  if (!(omega > 0) || !std::isfinite(omega))
    throw std::invalid_argument("params: omega must be positive");
  if (!(nu > 0) || !std::isfinite(nu))
    throw std::invalid_argument("params: nu must be positive");
  for (int u = 0; u < n; ++u) {
    if (!std::isfinite(alpha[u]))
      throw std::invalid_argument("params: non-finite alpha");
    if (!(mu[u] >= 0) || !std::isfinite(mu[u]))
      throw std::invalid_argument("params: mu must be nonnegative");
    if (!(sigma[u] > 0) || !std::isfinite(sigma[u]))
      throw std::invalid_argument("params: sigma must be positive");
  }
  check_pattern(A, net, /*allow_diag=*/false, /*require_nonneg=*/false, "A");
  check_pattern(B, net, /*allow_diag=*/true, /*require_nonneg=*/true, "B");
}

bool is_diagonal(const SparseMat& m) {
  for (int v = 0; v < m.outerSize(); ++v)
    for (SparseMat::InnerIterator it(m, v); it; ++it)
      if (it.row() != v && it.value() != 0) return false;
  return true;
}

double sample_sentiment(SentimentKind kind, double x, double sigma_u,
                        Rng& rng) {
  switch (kind) {
    case SentimentKind::gaussian:
      return x + sigma_u * normal01(rng);
    case SentimentKind::logistic:
      return uniform01(rng) < 1.0 / (1.0 + std::exp(-x)) ? 1.0 : -1.0;
  }
  throw std::logic_error("unknown sentiment kind");
}

}  // namespace opidyn
