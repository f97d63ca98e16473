#include "opidyn/simulate.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

namespace opidyn {

std::optional<double> sample_next_event_time(double lambda_now, double mu_u,
                                             double nu, double t, double T,
                                             Rng& rng) {
  double lbar = std::max(lambda_now, mu_u);
  if (!(lbar > 0)) return std::nullopt;
  double s = t;
  while (true) {
    s += exp_unit(rng) / lbar;
    if (!(s < T)) return std::nullopt;
    const double lam_s = decay_intensity(lambda_now, mu_u, nu, s - t);
    if (uniform01(rng) * lbar < lam_s) return s;
    lbar = std::max(lam_s, mu_u);  // tightened bound still dominates the tail
  }
}

namespace {

struct Candidate {
  double t;
  int u;
  std::uint64_t gen;
};
struct Later {
  bool operator()(const Candidate& a, const Candidate& b) const {
    return a.t > b.t;
  }
};

EventLog run_loop(MarkovState& st, double t_start, const Network& net,
                  const ModelParams& p, const SimConfig& cfg, SimStats* stats) {
  const int n = net.n_users();
  const double T = cfg.horizon;
  if (!(T >= t_start))
    throw std::invalid_argument("simulate: horizon precedes start time");

  std::vector<Rng> stream;
  stream.reserve(n);
  for (int u = 0; u < n; ++u) stream.push_back(make_stream(cfg.rng_seed, u));

  // Next-candidate priority queue with lazy invalidation: each push carries
  // the user's generation counter; stale pops are skipped. After an event
  // only the poster and their followers are re-drawn.
  std::vector<std::uint64_t> gen(n, 0);
  std::priority_queue<Candidate, std::vector<Candidate>, Later> queue;

  SimStats local;
  auto propose = [&](int u, double t) {
    ++gen[u];
    ++local.n_proposals;
    const double lam = st.intensity_at(u, t, p);
    if (auto s = sample_next_event_time(lam, p.mu[u], p.nu, t, T, stream[u]))
      queue.push({*s, u, gen[u]});
  };

  for (int u = 0; u < n; ++u) propose(u, t_start);
  local.n_proposals = 0;  // count only event-driven re-draws
  local.n_rekeys = 0;

  EventLog log;
  log.horizon = T;
  double prev_t = t_start;
  while (!queue.empty()) {
    const Candidate c = queue.top();
    queue.pop();
    if (c.gen != gen[c.u]) continue;  // superseded key

    // distinct timestamps keep downstream feature passes unambiguous
    double t = c.t;
    if (t <= prev_t) t = std::nextafter(prev_t, std::numeric_limits<double>::max());
    if (!(t < T)) { propose(c.u, c.t); continue; }

    st.advance_user(c.u, t, p);
    Event ev{t, c.u, 0.0};
    ev.m = sample_sentiment(cfg.sentiment, st.x[c.u], p.sigma[c.u], stream[c.u]);

    if (cfg.max_events && log.events.size() >= *cfg.max_events) {
      log.horizon = std::nextafter(prev_t, std::numeric_limits<double>::max());
      throw truncation_error(
          "simulate: event budget exhausted before the horizon", std::move(log));
    }

    apply_jump(st, ev, p, net);
    log.events.push_back(ev);
    ++local.n_events;
    prev_t = t;

    for (int w : net.followers(c.u)) {
      propose(w, t);
      ++local.n_rekeys;
    }
    propose(c.u, t);  // self re-draw after the intensity jump
    ++local.n_rekeys;
  }
  if (stats) *stats = local;
  return log;
}

}  // namespace

EventLog simulate(const Network& net, const ModelParams& p,
                  const SimConfig& cfg, SimStats* stats) {
  p.validate(net);
  MarkovState st = MarkovState::initial(p);
  return run_loop(st, 0.0, net, p, cfg, stats);
}

EventLog simulate_from(MarkovState& st, const Network& net,
                       const ModelParams& p, const SimConfig& cfg,
                       SimStats* stats) {
  return run_loop(st, st.t_now, net, p, cfg, stats);
}

}  // namespace opidyn
