#pragma once
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "opidyn/markov.hpp"
#include "opidyn/types.hpp"

namespace opidyn {

struct SimConfig {
  double horizon = 0.0;  // absolute end time T; events are drawn on [start, T)
  std::uint64_t rng_seed = 0;
  SentimentKind sentiment = SentimentKind::gaussian;
  std::optional<std::uint64_t> max_events;
};

// Optional instrumentation filled by simulate(); counters make the event
// loop's locality auditable (queue updates per event = followers + self).
struct SimStats {
  std::uint64_t n_events = 0;
  std::uint64_t n_rekeys = 0;      // candidate re-draws caused by events
  std::uint64_t n_proposals = 0;   // total candidate draws after startup
};

// Thrown when max_events is hit before the horizon; carries everything
// generated so far (partial.horizon is just past the last emitted event).
class truncation_error : public std::runtime_error {
 public:
  truncation_error(std::string what, EventLog partial_log)
      : std::runtime_error(std::move(what)), partial(std::move(partial_log)) {}
  EventLog partial;
};

// Draws the next candidate event time for one user by thinning. lambda_now
// is the user's intensity at time t; between events the intensity moves
// monotonically toward mu_u, so max(lambda_now, mu_u) dominates the whole
// tail and stays valid as it is tightened after each rejection. Returns
// nothing when the next event falls at or beyond T (or the rate is zero).
std::optional<double> sample_next_event_time(double lambda_now, double mu_u,
                                             double nu, double t, double T,
                                             Rng& rng);

// Samples one full trajectory on [0, T) from the initial state.
EventLog simulate(const Network& net, const ModelParams& p,
                  const SimConfig& cfg, SimStats* stats = nullptr);

// Continues an existing state from st.t_now up to cfg.horizon, mutating st
// in place; the returned log holds only the newly generated events. Used by
// Monte Carlo forecasting to branch many futures off one reconstructed past.
EventLog simulate_from(MarkovState& st, const Network& net,
                       const ModelParams& p, const SimConfig& cfg,
                       SimStats* stats = nullptr);

}  // namespace opidyn
