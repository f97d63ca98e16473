#pragma once
#include "opidyn/types.hpp"

namespace opidyn {

// Per-user Markov state of the coupled opinion/intensity process. Both the
// latent opinion x and the intensity lambda relax exponentially toward their
// baselines between events and jump when a followed user posts, so the state
// at any time is determined by the value at the last touch plus the gap:
//
//   x(t)      = alpha_u  + (x(s) - alpha_u)  * exp(-omega (t-s))
//   lambda(t) = mu_u     + (lambda(s) - mu_u) * exp(-nu (t-s))
//
// Values are stored at per-user timestamps t_last and decayed lazily on
// access, so an event costs O(out-degree of the poster), never O(n).
struct MarkovState {
  std::vector<double> x;       // opinion at t_last[u]
  std::vector<double> lam;     // intensity at t_last[u]
  std::vector<double> t_last;  // last touch time per user
  double t_now = 0.0;          // latest event time folded in

  static MarkovState initial(const ModelParams& p);

  double opinion_at(int u, double t, const ModelParams& p) const;
  double intensity_at(int u, double t, const ModelParams& p) const;

  // Decays user u's stored values forward to time t (t >= t_last[u]).
  void advance_user(int u, double t, const ModelParams& p);
};

// Closed-form decay of a single value toward its baseline over dt >= 0.
double decay_opinion(double x, double alpha_u, double omega, double dt);
double decay_intensity(double lam, double mu_u, double nu, double dt);

// Folds one event into the state: decays the poster and every affected
// follower to ev.t, then applies the opinion jump A(w,u)*m and intensity
// jump B(w,u). Touches only the poster and users with a nonzero entry in
// column u of A or B. Requires ev.t >= t_now.
void apply_jump(MarkovState& st, const Event& ev, const ModelParams& p,
                const Network& net);

// Reference evaluators: direct sums over the full history (all events with
// t_i < t). O(|log| log nnz); used to cross-check the incremental state.
double opinion_from_history(const EventLog& log, const ModelParams& p,
                            int u, double t);
double intensity_from_history(const EventLog& log, const ModelParams& p,
                              int u, double t);

// Replays every event with t_i < t through apply_jump starting from the
// initial state. Shared by forecasting and evaluation.
MarkovState state_at(const EventLog& log, const ModelParams& p,
                     const Network& net, double t);

}  // namespace opidyn
