#pragma once
#include <cstdint>
#include <optional>
#include <vector>

#include "opidyn/estimate.hpp"
#include "opidyn/types.hpp"

namespace opidyn {

struct DatasetStats {
  int n_users = 0;
  std::size_t n_edges = 0;
  std::size_t n_events = 0;
  double t_first = 0.0, t_last = 0.0;
  double events_per_user = 0.0;
  double mean_mark = 0.0, std_mark = 0.0;
};

DatasetStats dataset_stats(const EventLog& log, const Network& net);

struct EvalOptions {
  // forecast horizons in seconds; 0 = nowcast (state at the event itself)
  std::vector<double> horizons{0.0};
  double train_fraction = 0.9;
  // fixed parameters to score; otherwise fit on the training slice
  std::optional<ModelParams> params;
  EstimateConfig fit;
  // RK4 step for the self-excited mean forecast; <= 0 picks 0.01/max(omega,nu)
  double ode_step = 0.0;
  // Monte Carlo fallback controls (used only when B has off-diagonal terms)
  int mc_runs = 200;
  std::uint64_t seed = 1;
};

struct EvalRow {
  double horizon = 0.0;
  double mse = 0.0;
  // share of test marks whose forecast breaks sign agreement;
  // a forecast of exactly 0 against a nonzero mark counts as a failure
  double failure_rate = 0.0;
};

struct EvalReport {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<EvalRow> rows;
};

// Chronological split: first train_fraction of events fit the model (unless
// params are given), the tail is scored. For horizon T, each held-out mark
// m_j is predicted by the expected opinion of its poster at t_j conditioned
// on the history up to t_j - T.
EvalReport evaluate(const EventLog& log, const Network& net,
                    const EvalOptions& opt);

}  // namespace opidyn
