#pragma once
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opidyn/types.hpp"

namespace opidyn {

// Sufficient statistics for one user's likelihood terms. Row j corresponds
// to the user's j-th own event at time t_j:
//   g(j,k) = sum over source opinion_sources[k]'s earlier events of
//            m_i * exp(-omega (t_j - t_i))        (opinion regressors)
//   h(j,k) = sum over source intensity_sources[k]'s earlier events of
//            exp(-nu (t_j - t_i))                 (intensity regressors)
//   target(j) = observed mark m_j
// compensator(k) = integral over [0, T) of source k's kernel sum,
//                  sum_i (1 - exp(-nu (T - t_i))) / nu.
// opinion_sources = followees(u); intensity_sources = u then followees(u).
struct UserFeatures {
  std::vector<int> opinion_sources;
  std::vector<int> intensity_sources;
  Eigen::MatrixXd g;
  Eigen::MatrixXd h;
  Vec target;
  Vec compensator;
};

struct FeatureTable {
  double omega = 0.0, nu = 0.0, horizon = 0.0;
  std::vector<UserFeatures> users;
};

// One linear pass over the log with per-source running kernel sums decayed
// lazily; O(total events * degree). Sums strictly exclude the current event.
FeatureTable build_features(const EventLog& log, const Network& net,
                            double omega, double nu);

struct SpgConfig {
  double alpha_max = 1e4;            // step clamp
  double alpha_bb0 = 1.0;            // initial Barzilai-Borwein step
  int memory = 10;                   // nonmonotone reference window
  double tol = 1e-6;                 // sup-norm of projected gradient step
  double sufficient_decrease = 1e-4; // line-search slope fraction
  int max_iters = 500;
};

struct EstimateConfig {
  double omega = 1.0;
  double nu = 1.0;
  double ridge = 1e-3;
  SpgConfig spg;
  double mu_floor = 1e-9;  // baseline intensity for users with no events
  std::optional<int> threads;
};

// Penalized least squares for one user's opinion parameters: minimizes
// ||alpha_u + g b - m||^2 + ridge ||(alpha_u, b)||^2. With ridge = 0 the
// design must have full column rank, otherwise throws with a hint to set
// ridge > 0. Returns (alpha_u, coefficients aligned to opinion_sources).
std::pair<double, Vec> estimate_opinion_params(const UserFeatures& uf,
                                               double ridge);

// Negative log likelihood of one user's event times as a function of
// x = (mu_u, b aligned to intensity_sources):
//   f(x) = -sum_j log(mu_u + h_j . b) + mu_u T + b . compensator
// Returns +inf (gradient untouched) if any event intensity is <= 0.
double hawkes_negloglik(const Vec& x, const UserFeatures& uf, double T,
                        Vec* grad = nullptr);

struct SpgResult {
  double mu = 0.0;
  Vec b;            // aligned to intensity_sources
  bool converged = false;
  int iters = 0;
  double objective = 0.0;
  double pg_norm = 0.0;  // final projected-gradient sup norm
};

// Spectral projected gradient on the nonnegative orthant with a Barzilai-
// Borwein step and nonmonotone backtracking against the worst of the last
// `memory` objectives. Every iterate is exactly feasible.
SpgResult spg_estimate_intensity(const UserFeatures& uf, double T,
                                 const SpgConfig& cfg);

struct EstimateResult {
  ModelParams params;
  // users whose subproblem threw; their slots hold fallback values
  std::vector<std::pair<int, std::string>> failures;
  int spg_unconverged = 0;
};

// Fits every user's opinion and intensity parameters independently (the
// likelihood separates per receiving user), in parallel. Users with no
// events get alpha = 0, mu = mu_floor, empty rows in A and B. sigma_u is
// the residual standard deviation of the opinion fit (1.0 when it cannot
// be estimated). omega and nu are taken from cfg and copied to the result.
EstimateResult estimate_all(const EventLog& log, const Network& net,
                            const EstimateConfig& cfg);

// Picks decay rates by refitting on the first 90% of events (chronologically)
// and scoring one-step-ahead opinion MSE on the held-out tail for every
// (omega, nu) grid pair. Returns the winning pair and its score.
struct KernelSelection {
  double omega = 0.0, nu = 0.0, mse = 0.0;
};
KernelSelection select_kernels(const EventLog& log, const Network& net,
                               const std::vector<double>& omega_grid,
                               const std::vector<double>& nu_grid,
                               const EstimateConfig& base);

}  // namespace opidyn
