#pragma once
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "opidyn/rng.hpp"

namespace opidyn {

using Vec = Eigen::VectorXd;
// Column-major: column v holds the coefficients applied when user v posts.
using SparseMat = Eigen::SparseMatrix<double>;

// Directed follow graph over dense user ids [0, n). An edge (u, v) means
// "u follows v": v's posts reach u. Self-edges are rejected, duplicate
// edges collapse to one. Adjacency is stored in both directions so posting
// (followers of v) and listening (followees of u) are both O(degree).
class Network {
 public:
  Network() = default;
  Network(int n_users, std::vector<std::pair<int, int>> edges);

  int n_users() const { return n_users_; }
  std::size_t n_edges() const { return n_edges_; }

  // users that u follows, sorted ascending
  const std::vector<int>& followees(int u) const { return followees_[u]; }
  // users that follow v, sorted ascending
  const std::vector<int>& followers(int v) const { return followers_[v]; }
  // deduplicated (follower, followee) pairs, sorted lexicographically
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  bool has_edge(int follower, int followee) const;

 private:
  int n_users_ = 0;
  std::size_t n_edges_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> followees_;
  std::vector<std::vector<int>> followers_;
};

// One message: time (seconds), posting user, sentiment mark.
struct Event {
  double t;
  int u;
  double m;
};

// Chronologically sorted message history on [0, horizon). Times must be
// finite and strictly increasing; equal timestamps are not representable
// (ingestion perturbs ties before constructing a log).
struct EventLog {
  std::vector<Event> events;
  double horizon = 0.0;

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }
  // Throws std::invalid_argument describing the first violation.
  void validate(int n_users) const;
};

enum class SentimentKind { gaussian, logistic };

// Full generative parameter set.
//   alpha: baseline opinions          A(u,v): opinion jump on u per unit mark
//   mu:    baseline intensities       B(u,v): intensity jump on u
//   omega, nu: exponential decay rates of the opinion / intensity kernels
//   sigma: per-user Gaussian sentiment noise scale
// A and B are row-indexed by the receiving user and column-indexed by the
// posting user; A(u,v) may be nonzero only when u follows v, B additionally
// allows the diagonal (self-excitation). A(u,u) is always zero: a user's own
// posts carry no opinion self-jump.
struct ModelParams {
  double omega = 1.0;
  double nu = 1.0;
  Vec alpha;
  Vec mu;
  Vec sigma;
  SparseMat A;
  SparseMat B;

  int n_users() const { return static_cast<int>(alpha.size()); }
  // Checks sizes, sign constraints (omega, nu > 0; mu, B >= 0; sigma > 0)
  // and that the sparsity patterns respect the follow graph.
  void validate(const Network& net) const;
};

bool is_diagonal(const SparseMat& m);

// Draw one sentiment mark given the poster's latent opinion x.
//   gaussian: x + sigma_u * N(0,1)
//   logistic: +1 with probability 1/(1+exp(-x)), else -1
double sample_sentiment(SentimentKind kind, double x, double sigma_u, Rng& rng);

}  // namespace opidyn
