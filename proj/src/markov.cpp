#include "opidyn/markov.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace opidyn {

double decay_opinion(double x, double alpha_u, double omega, double dt) {
  return alpha_u + (x - alpha_u) * std::exp(-omega * dt);
}

double decay_intensity(double lam, double mu_u, double nu, double dt) {
  return mu_u + (lam - mu_u) * std::exp(-nu * dt);
}

MarkovState MarkovState::initial(const ModelParams& p) {
  MarkovState st;
  const int n = p.n_users();
  st.x.assign(p.alpha.data(), p.alpha.data() + n);
  st.lam.assign(p.mu.data(), p.mu.data() + n);
  st.t_last.assign(n, 0.0);
  st.t_now = 0.0;
  return st;
}

double MarkovState::opinion_at(int u, double t, const ModelParams& p) const {
  return decay_opinion(x[u], p.alpha[u], p.omega, t - t_last[u]);
}

double MarkovState::intensity_at(int u, double t, const ModelParams& p) const {
  return decay_intensity(lam[u], p.mu[u], p.nu, t - t_last[u]);
}

void MarkovState::advance_user(int u, double t, const ModelParams& p) {
  const double dt = t - t_last[u];
  if (dt == 0) return;
  if (dt < 0)
    throw std::invalid_argument("markov state: cannot advance user " +
                                std::to_string(u) + " backwards in time");
  x[u] = decay_opinion(x[u], p.alpha[u], p.omega, dt);
  lam[u] = decay_intensity(lam[u], p.mu[u], p.nu, dt);
  t_last[u] = t;
}

void apply_jump(MarkovState& st, const Event& ev, const ModelParams& p,
                const Network& net) {
  if (ev.u < 0 || ev.u >= net.n_users())
    throw std::invalid_argument("apply_jump: unknown user " +
                                std::to_string(ev.u));
  if (ev.t < st.t_now)
    throw std::invalid_argument("apply_jump: event precedes current time");
  st.advance_user(ev.u, ev.t, p);
  for (SparseMat::InnerIterator it(p.A, ev.u); it; ++it) {
    const int w = static_cast<int>(it.row());
    st.advance_user(w, ev.t, p);
    st.x[w] += it.value() * ev.m;
  }
  for (SparseMat::InnerIterator it(p.B, ev.u); it; ++it) {
    const int w = static_cast<int>(it.row());
    st.advance_user(w, ev.t, p);
    st.lam[w] += it.value();
  }
  st.t_now = ev.t;
}

double opinion_from_history(const EventLog& log, const ModelParams& p, int u,
                            double t) {
  double x = p.alpha[u];
  for (const Event& e : log.events) {
    if (e.t >= t) break;
    const double a = p.A.coeff(u, e.u);
    if (a != 0) x += a * e.m * std::exp(-p.omega * (t - e.t));
  }
  return x;
}

double intensity_from_history(const EventLog& log, const ModelParams& p, int u,
                              double t) {
  double lam = p.mu[u];
  for (const Event& e : log.events) {
    if (e.t >= t) break;
    const double b = p.B.coeff(u, e.u);
    if (b != 0) lam += b * std::exp(-p.nu * (t - e.t));
  }
  return lam;
}

MarkovState state_at(const EventLog& log, const ModelParams& p,
                     const Network& net, double t) {
  MarkovState st = MarkovState::initial(p);
  for (const Event& e : log.events) {
    if (e.t >= t) break;
    apply_jump(st, e, p, net);
  }
  st.t_now = t;
  return st;
}

}  // namespace opidyn
