#include "opidyn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "opidyn/forecast.hpp"
#include "opidyn/markov.hpp"

namespace opidyn {

DatasetStats dataset_stats(const EventLog& log, const Network& net) {
  DatasetStats s;
  s.n_users = net.n_users();
  s.n_edges = net.n_edges();
  s.n_events = log.size();
  if (!log.empty()) {
    s.t_first = log.events.front().t;
    s.t_last = log.events.back().t;
    s.events_per_user =
        static_cast<double>(log.size()) / std::max(net.n_users(), 1);
    double sum = 0.0, sq = 0.0;
    for (const Event& e : log.events) {
      sum += e.m;
      sq += e.m * e.m;
    }
    const double n = static_cast<double>(log.size());
    s.mean_mark = sum / n;
    s.std_mark = std::sqrt(std::max(sq / n - s.mean_mark * s.mean_mark, 0.0));
  }
  return s;
}

namespace {

int sgn(double v) { return (v > 0) - (v < 0); }

}  // namespace

EvalReport evaluate(const EventLog& log, const Network& net,
                    const EvalOptions& opt) {
  log.validate(net.n_users());
  if (!(opt.train_fraction > 0) || !(opt.train_fraction < 1))
    throw std::invalid_argument("evaluate: train_fraction outside (0, 1)");
  const std::size_t n_total = log.size();
  const auto n_train = static_cast<std::size_t>(
      opt.train_fraction * static_cast<double>(n_total));
  if (n_train == 0 || n_train >= n_total)
    throw std::invalid_argument("evaluate: too few events to split");

  ModelParams params;
  if (opt.params) {
    params = *opt.params;
    params.validate(net);
  } else {
    EventLog train;
    train.events.assign(log.events.begin(), log.events.begin() + n_train);
    train.horizon = log.events[n_train].t;
    params = estimate_all(train, net, opt.fit).params;
  }

  const double step =
      opt.ode_step > 0 ? opt.ode_step : 0.01 / std::max(params.omega, params.nu);
  const bool no_excitation = params.B.nonZeros() == 0;
  const bool diag_excitation = is_diagonal(params.B);

  EvalReport rep;
  rep.n_train = n_train;
  rep.n_test = n_total - n_train;

  for (double horizon : opt.horizons) {
    if (horizon < 0) throw std::invalid_argument("evaluate: negative horizon");
    double sse = 0.0;
    std::size_t failures = 0;

    if (horizon == 0) {
      // nowcast: latent opinion an instant before each held-out event
      MarkovState st = MarkovState::initial(params);
      for (std::size_t i = 0; i < n_total; ++i) {
        const Event& e = log.events[i];
        if (i >= n_train) {
          const double pred = st.opinion_at(e.u, e.t, params);
          sse += (pred - e.m) * (pred - e.m);
          failures += sgn(pred) != sgn(e.m);
        }
        apply_jump(st, e, params, net);
      }
    } else {
      // condition on the history up to t_j - horizon; test times ascend, so
      // one incremental state sweeps the whole tail
      MarkovState st = MarkovState::initial(params);
      std::size_t next = 0;  // first event not yet folded into st
      const int n = net.n_users();
      for (std::size_t i = n_train; i < n_total; ++i) {
        const Event& e = log.events[i];
        const double t0 = std::max(e.t - horizon, 0.0);
        while (next < n_total && log.events[next].t < t0) {
          apply_jump(st, log.events[next], params, net);
          ++next;
        }
        ForecastState fs;
        fs.t0 = t0;
        fs.x0.resize(n);
        fs.eta0.resize(n);
        for (int u = 0; u < n; ++u) {
          fs.x0[u] = st.opinion_at(u, t0, params);
          fs.eta0[u] = st.intensity_at(u, t0, params);
        }
        double pred;
        if (no_excitation) {
          pred = forecast_poisson(fs, params, e.t).mean[e.u];
        } else if (diag_excitation) {
          pred = forecast_hawkes(fs, params, e.t, step).mean[e.u];
        } else {
          EventLog head;
          head.events.assign(log.events.begin(),
                             log.events.begin() + static_cast<long>(next));
          const double last_t =
              head.events.empty()
                  ? 0.0
                  : std::nextafter(head.events.back().t,
                                   std::numeric_limits<double>::max());
          head.horizon = std::max(t0, last_t);
          McConfig mc;
          mc.runs = opt.mc_runs;
          mc.seed = derive_seed(opt.seed, i);
          pred = forecast_mc(head, params, net, t0, e.t, mc).mean[e.u];
        }
        sse += (pred - e.m) * (pred - e.m);
        failures += sgn(pred) != sgn(e.m);
      }
    }
    EvalRow row;
    row.horizon = horizon;
    row.mse = sse / static_cast<double>(rep.n_test);
    row.failure_rate =
        static_cast<double>(failures) / static_cast<double>(rep.n_test);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace opidyn
