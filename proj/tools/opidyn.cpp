// opidyn: simulate, fit and forecast networked opinion dynamics driven by
// marked self- and cross-exciting event streams.
#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "opidyn/estimate.hpp"
#include "opidyn/eval.hpp"
#include "opidyn/forecast.hpp"
#include "opidyn/io.hpp"
#include "opidyn/netgen.hpp"
#include "opidyn/simulate.hpp"

namespace {

using namespace opidyn;

std::vector<double> parse_list(const std::string& text, bool durations) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(durations ? parse_duration(item) : std::stod(item));
  }
  if (out.empty()) throw std::invalid_argument("empty list: \"" + text + "\"");
  return out;
}

std::string json_vec(const Vec& v) {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (int i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << "]";
  return os.str();
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    out << text;
  }
}

SentimentKind parse_sentiment(const std::string& s) {
  if (s == "gaussian") return SentimentKind::gaussian;
  if (s == "logistic") return SentimentKind::logistic;
  throw std::invalid_argument("sentiment must be gaussian or logistic");
}

std::string forecast_json(const ForecastResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << "{\"t\":" << r.t << ",\"method\":\"";
  switch (r.method) {
    case ForecastMethod::poisson_analytic: os << "analytic"; break;
    case ForecastMethod::hawkes_ode: os << "ode"; break;
    case ForecastMethod::monte_carlo: os << "monte-carlo"; break;
  }
  os << "\",\"mean\":" << json_vec(r.mean);
  if (r.variance) os << ",\"variance\":" << json_vec(*r.variance);
  if (r.mc_runs) os << ",\"runs\":" << *r.mc_runs;
  os << "}\n";
  return os.str();
}

std::string stability_json(const StabilityReport& rep) {
  std::ostringstream os;
  os.precision(17);
  os << "{\"regime\":\""
     << (rep.regime == Regime::poisson ? "poisson" : "hawkes") << "\""
     << ",\"stable\":" << (rep.stable ? "true" : "false")
     << ",\"statistic\":" << rep.statistic
     << ",\"threshold\":" << rep.threshold;
  if (rep.steady_state) os << ",\"steady_state\":" << json_vec(*rep.steady_state);
  if (rep.stationary_intensity)
    os << ",\"stationary_intensity\":" << json_vec(*rep.stationary_intensity);
  os << "}\n";
  return os.str();
}

int run(int argc, char** argv) {
  CLI::App app{"networked opinion dynamics: simulate, estimate, forecast"};
  app.require_subcommand(1);

  // ---- netgen ----------------------------------------------------------
  auto* c_net = app.add_subcommand("netgen", "sample a Kronecker follow graph");
  std::string ng_type = "assortative", ng_seed_matrix, ng_out;
  int ng_scale = 6;
  std::uint64_t ng_seed = 0;
  c_net->add_option("--type", ng_type,
                    "assortative | dissortative | core-periphery");
  c_net->add_option("--seed-matrix", ng_seed_matrix,
                    "custom 2x2 seed, row-major \"a,b,c,d\"");
  c_net->add_option("--scale", ng_scale, "graph has 2^scale nodes")
      ->check(CLI::Range(0, 14));
  c_net->add_option("--seed", ng_seed, "rng seed");
  c_net->add_option("-o,--out", ng_out, "edge list output")->required();

  // ---- paramgen --------------------------------------------------------
  auto* c_par = app.add_subcommand("paramgen", "draw synthetic model parameters");
  std::string pg_network, pg_out;
  ParamGenSpec pg;
  double pg_mu_lo = 0, pg_mu_hi = 1, pg_b_lo = 0, pg_b_hi = 1;
  c_par->add_option("-n,--network", pg_network, "edge list")->required();
  c_par->add_option("-o,--out", pg_out, "params JSON output")->required();
  c_par->add_option("--omega", pg.omega, "opinion kernel decay rate");
  c_par->add_option("--nu", pg.nu, "intensity kernel decay rate");
  c_par->add_option("--sigma", pg.sigma, "sentiment noise scale");
  c_par->add_option("--alpha-mean", pg.alpha_mean);
  c_par->add_option("--alpha-std", pg.alpha_std);
  c_par->add_option("--a-mean", pg.a_mean);
  c_par->add_option("--a-std", pg.a_std);
  c_par->add_option("--mu-lo", pg_mu_lo);
  c_par->add_option("--mu-hi", pg_mu_hi);
  c_par->add_option("--b-lo", pg_b_lo);
  c_par->add_option("--b-hi", pg_b_hi);
  c_par->add_option("--b-scale", pg.b_scale, "scales every B draw");
  c_par->add_option("--hawkes-fraction", pg.hawkes_fraction,
                    "share of users with self-excitation")
      ->check(CLI::Range(0.0, 1.0));
  c_par->add_option("--seed", pg.rng_seed, "rng seed");

  // ---- simulate --------------------------------------------------------
  auto* c_sim = app.add_subcommand("simulate", "sample an event stream");
  std::string sm_network, sm_params, sm_out, sm_horizon, sm_sentiment = "gaussian";
  std::string sm_plot, sm_plot_window = "10m";
  std::uint64_t sm_seed = 0;
  std::optional<std::uint64_t> sm_max_events;
  bool sm_truncate_ok = false, sm_stats = false;
  c_sim->add_option("-n,--network", sm_network)->required();
  c_sim->add_option("-p,--params", sm_params)->required();
  c_sim->add_option("-T,--horizon", sm_horizon, "duration, e.g. 3600 or 6h")
      ->required();
  c_sim->add_option("-o,--out", sm_out, "event log output (JSONL)")->required();
  c_sim->add_option("--seed", sm_seed, "rng seed");
  c_sim->add_option("--sentiment", sm_sentiment, "gaussian | logistic");
  c_sim->add_option("--max-events", sm_max_events, "hard event budget");
  c_sim->add_flag("--truncate-ok", sm_truncate_ok,
                  "keep the partial log when the budget trips");
  c_sim->add_flag("--stats", sm_stats, "print loop counters");
  c_sim->add_option("--plot", sm_plot, "running-average CSV");
  c_sim->add_option("--plot-window", sm_plot_window,
                    "running-average window (default 10m)");

  // ---- estimate --------------------------------------------------------
  auto* c_est = app.add_subcommand("estimate", "fit parameters from a log");
  std::string es_log, es_network, es_out, es_horizon;
  std::string es_grid_omega, es_grid_nu;
  EstimateConfig es_cfg;
  int es_threads = 0;
  c_est->add_option("-l,--log", es_log)->required();
  c_est->add_option("-n,--network", es_network)->required();
  c_est->add_option("-o,--out", es_out, "params JSON output")->required();
  c_est->add_option("-T,--horizon", es_horizon,
                    "observation window (default: just past the last event)");
  c_est->add_option("--omega", es_cfg.omega, "opinion kernel decay rate");
  c_est->add_option("--nu", es_cfg.nu, "intensity kernel decay rate");
  c_est->add_option("--ridge", es_cfg.ridge, "opinion ridge penalty");
  c_est->add_option("--threads", es_threads, "worker threads");
  c_est->add_option("--grid-omega", es_grid_omega,
                    "candidate omegas, e.g. \"0.1,1,10\" (held-out selection)");
  c_est->add_option("--grid-nu", es_grid_nu, "candidate nus");

  // ---- forecast --------------------------------------------------------
  auto* c_fc = app.add_subcommand("forecast", "expected opinions at t0 + dt");
  std::string fc_log, fc_network, fc_params, fc_t0, fc_dt, fc_out;
  std::string fc_method = "auto", fc_plot;
  double fc_step = 0, fc_eps = 0.05, fc_delta = 0.1;
  int fc_runs = 0, fc_plot_points = 50;
  std::uint64_t fc_seed = 0;
  bool fc_variance = false;
  c_fc->add_option("-l,--log", fc_log)->required();
  c_fc->add_option("-n,--network", fc_network)->required();
  c_fc->add_option("-p,--params", fc_params)->required();
  c_fc->add_option("--t0", fc_t0, "forecast origin (default: end of log)");
  c_fc->add_option("--dt", fc_dt, "look-ahead duration")->required();
  c_fc->add_option("--method", fc_method, "auto | analytic | mc");
  c_fc->add_option("--step", fc_step, "RK4 step for the self-excited mean");
  c_fc->add_option("--runs", fc_runs, "mc runs (0 = size from pilot)");
  c_fc->add_option("--eps", fc_eps, "mc mean accuracy target");
  c_fc->add_option("--delta", fc_delta, "mc failure probability");
  c_fc->add_option("--seed", fc_seed, "rng seed");
  c_fc->add_flag("--variance", fc_variance, "attach the opinion variance");
  c_fc->add_option("-o,--out", fc_out, "JSON output (default stdout)");
  c_fc->add_option("--plot", fc_plot, "mean trajectory CSV");
  c_fc->add_option("--plot-points", fc_plot_points, "samples along [t0, t]");

  // ---- steady ----------------------------------------------------------
  auto* c_st = app.add_subcommand("steady", "stability and steady-state opinion");
  std::string st_params, st_regime = "poisson", st_out;
  c_st->add_option("-p,--params", st_params)->required();
  c_st->add_option("--regime", st_regime, "poisson | hawkes");
  c_st->add_option("-o,--out", st_out, "JSON output (default stdout)");

  // ---- variance --------------------------------------------------------
  auto* c_var = app.add_subcommand("variance", "opinion covariance diagonal");
  std::string va_log, va_network, va_params, va_t0, va_dt, va_out;
  double va_step = 0;
  int va_cap = 64;
  c_var->add_option("-l,--log", va_log)->required();
  c_var->add_option("-n,--network", va_network)->required();
  c_var->add_option("-p,--params", va_params)->required();
  c_var->add_option("--t0", va_t0, "origin (default: end of log)");
  c_var->add_option("--dt", va_dt, "look-ahead duration")->required();
  c_var->add_option("--step", va_step, "RK4 step");
  c_var->add_option("--cap", va_cap, "max users for the dense flow");
  c_var->add_option("-o,--out", va_out, "JSON output (default stdout)");

  // ---- evaluate --------------------------------------------------------
  auto* c_ev = app.add_subcommand("evaluate",
                                  "chronological split, forecast the tail");
  std::string ev_log, ev_network, ev_params, ev_horizons = "0", ev_out;
  EvalOptions ev_opt;
  c_ev->add_option("-l,--log", ev_log)->required();
  c_ev->add_option("-n,--network", ev_network)->required();
  c_ev->add_option("-p,--params", ev_params,
                   "score these params instead of fitting");
  c_ev->add_option("--horizons", ev_horizons,
                   "comma list of look-aheads, e.g. \"0,30m,1h\"");
  c_ev->add_option("--train-fraction", ev_opt.train_fraction)
      ->check(CLI::Range(0.0, 1.0));
  c_ev->add_option("--omega", ev_opt.fit.omega);
  c_ev->add_option("--nu", ev_opt.fit.nu);
  c_ev->add_option("--ridge", ev_opt.fit.ridge);
  c_ev->add_option("--mc-runs", ev_opt.mc_runs);
  c_ev->add_option("--seed", ev_opt.seed);
  c_ev->add_option("-o,--out", ev_out, "JSON output (default stdout)");

  // ---- stats -----------------------------------------------------------
  auto* c_da = app.add_subcommand("stats", "describe a dataset");
  std::string da_log, da_network, da_plot, da_window = "10m";
  c_da->add_option("-l,--log", da_log)->required();
  c_da->add_option("-n,--network", da_network);
  c_da->add_option("--plot", da_plot, "running sentiment average CSV");
  c_da->add_option("--window", da_window, "averaging window (default 10m)");

  CLI11_PARSE(app, argc, argv);

  if (*c_net) {
    KroneckerSpec spec;
    spec.scale = ng_scale;
    spec.rng_seed = ng_seed;
    if (!ng_seed_matrix.empty()) {
      const auto v = parse_list(ng_seed_matrix, false);
      if (v.size() != 4)
        throw std::invalid_argument("--seed-matrix needs four entries");
      spec.seed = {v[0], v[1], v[2], v[3]};
    } else if (ng_type == "assortative") {
      spec.seed = {0.96, 0.3, 0.3, 0.96};
    } else if (ng_type == "dissortative") {
      spec.seed = {0.3, 0.96, 0.96, 0.3};
    } else if (ng_type == "core-periphery") {
      spec.seed = {0.9, 0.5, 0.5, 0.3};
    } else {
      throw std::invalid_argument("unknown graph type \"" + ng_type + "\"");
    }
    const Network net = kronecker_graph(spec);
    write_network(net, ng_out);
    std::cout << "users " << net.n_users() << " edges " << net.n_edges()
              << " (expected " << kronecker_expected_edges(spec) << ")\n";
    return 0;
  }

  if (*c_par) {
    pg.mu_lo = pg_mu_lo;
    pg.mu_hi = pg_mu_hi;
    pg.b_lo = pg_b_lo;
    pg.b_hi = pg_b_hi;
    const Network net = read_network(pg_network);
    write_params(gen_params(net, pg), pg_out);
    return 0;
  }

  if (*c_sim) {
    const Network net = read_network(sm_network);
    const ModelParams params = read_params(sm_params);
    SimConfig cfg;
    cfg.horizon = parse_duration(sm_horizon);
    cfg.rng_seed = sm_seed;
    cfg.sentiment = parse_sentiment(sm_sentiment);
    cfg.max_events = sm_max_events;
    SimStats stats;
    EventLog log;
    try {
      log = simulate(net, params, cfg, &stats);
    } catch (const truncation_error& ex) {
      if (!sm_truncate_ok) {
        std::cerr << "error: " << ex.what() << " (pass --truncate-ok to keep "
                  << ex.partial.size() << " events)\n";
        return 1;
      }
      log = ex.partial;
      std::cerr << "note: budget hit, keeping " << log.size()
                << " events up to t=" << log.horizon << "\n";
    }
    write_event_log(log, sm_out);
    std::cout << "events " << log.size() << " horizon " << log.horizon << "\n";
    if (sm_stats)
      std::cout << "rekeys " << stats.n_rekeys << " proposals "
                << stats.n_proposals << "\n";
    if (!sm_plot.empty())
      write_plot_data(
          running_average(log, parse_duration(sm_plot_window), "sentiment"),
          sm_plot);
    return 0;
  }

  if (*c_est) {
    const Network net = read_network(es_network);
    std::optional<double> horizon;
    if (!es_horizon.empty()) horizon = parse_duration(es_horizon);
    const EventLog log = read_event_log(es_log, horizon);
    if (es_threads > 0) es_cfg.threads = es_threads;
    if (!es_grid_omega.empty() || !es_grid_nu.empty()) {
      const auto omegas = es_grid_omega.empty()
                              ? std::vector<double>{es_cfg.omega}
                              : parse_list(es_grid_omega, false);
      const auto nus = es_grid_nu.empty() ? std::vector<double>{es_cfg.nu}
                                          : parse_list(es_grid_nu, false);
      const KernelSelection sel = select_kernels(log, net, omegas, nus, es_cfg);
      es_cfg.omega = sel.omega;
      es_cfg.nu = sel.nu;
      std::cout << "selected omega " << sel.omega << " nu " << sel.nu
                << " (held-out mse " << sel.mse << ")\n";
    }
    const EstimateResult res = estimate_all(log, net, es_cfg);
    write_params(res.params, es_out);
    for (const auto& [u, why] : res.failures)
      std::cerr << "warning: user " << u << ": " << why << "\n";
    if (res.spg_unconverged > 0)
      std::cerr << "warning: intensity solver hit the iteration cap for "
                << res.spg_unconverged << " user(s)\n";
    return res.failures.empty() ? 0 : 2;
  }

  if (*c_fc) {
    const Network net = read_network(fc_network);
    const ModelParams params = read_params(fc_params);
    const EventLog log = read_event_log(fc_log);
    const double t0 =
        fc_t0.empty() ? log.horizon : parse_duration(fc_t0);
    const double t = t0 + parse_duration(fc_dt);
    const double step =
        fc_step > 0 ? fc_step : 0.01 / std::max(params.omega, params.nu);

    ForecastResult res;
    const bool analytic_ok = is_diagonal(params.B);
    if (fc_method == "mc" || (fc_method == "auto" && !analytic_ok)) {
      McConfig mc;
      if (fc_runs > 0) mc.runs = fc_runs;
      mc.eps = fc_eps;
      mc.delta = fc_delta;
      mc.seed = fc_seed;
      res = forecast_mc(log, params, net, t0, t, mc);
      if (!fc_variance) res.variance.reset();
    } else if (fc_method == "auto" || fc_method == "analytic") {
      const ForecastState fs = reconstruct_state(log, params, net, t0);
      res = params.B.nonZeros() == 0 ? forecast_poisson(fs, params, t)
                                     : forecast_hawkes(fs, params, t, step);
      if (fc_variance)
        res.variance = covariance_dynamics(fs, params, t, step).diagonal();
    } else {
      throw std::invalid_argument("unknown method \"" + fc_method + "\"");
    }
    emit(forecast_json(res), fc_out);

    if (!fc_plot.empty()) {
      if (res.method == ForecastMethod::monte_carlo)
        throw std::invalid_argument(
            "--plot needs the analytic path; rerun with --method analytic");
      const ForecastState fs = reconstruct_state(log, params, net, t0);
      std::vector<SeriesPoint> pts;
      const int npts = std::max(fc_plot_points, 2);
      for (int k = 0; k < npts; ++k) {
        const double tk = t0 + (t - t0) * k / (npts - 1);
        const Vec mean = params.B.nonZeros() == 0
                             ? forecast_poisson(fs, params, tk).mean
                             : forecast_hawkes(fs, params, tk, step).mean;
        for (int u = 0; u < net.n_users(); ++u)
          pts.push_back({tk, "u" + std::to_string(u), mean[u]});
      }
      write_plot_data(std::move(pts), fc_plot);
    }
    return 0;
  }

  if (*c_st) {
    const ModelParams params = read_params(st_params);
    Regime regime;
    if (st_regime == "poisson") regime = Regime::poisson;
    else if (st_regime == "hawkes") regime = Regime::hawkes;
    else throw std::invalid_argument("regime must be poisson or hawkes");
    emit(stability_json(steady_state(params, regime)), st_out);
    return 0;
  }

  if (*c_var) {
    const Network net = read_network(va_network);
    const ModelParams params = read_params(va_params);
    const EventLog log = read_event_log(va_log);
    const double t0 = va_t0.empty() ? log.horizon : parse_duration(va_t0);
    const double t = t0 + parse_duration(va_dt);
    const double step =
        va_step > 0 ? va_step : 0.01 / std::max(params.omega, params.nu);
    const ForecastState fs = reconstruct_state(log, params, net, t0);
    const Eigen::MatrixXd G = covariance_dynamics(fs, params, t, step, va_cap);
    std::ostringstream os;
    os.precision(17);
    os << "{\"t\":" << t << ",\"variance\":" << json_vec(G.diagonal())
       << "}\n";
    emit(os.str(), va_out);
    return 0;
  }

  if (*c_ev) {
    const Network net = read_network(ev_network);
    const EventLog log = read_event_log(ev_log);
    if (!ev_params.empty()) ev_opt.params = read_params(ev_params);
    ev_opt.horizons = parse_list(ev_horizons, true);
    const EvalReport rep = evaluate(log, net, ev_opt);
    std::ostringstream os;
    os.precision(17);
    os << "{\"n_train\":" << rep.n_train << ",\"n_test\":" << rep.n_test
       << ",\"rows\":[";
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      const auto& r = rep.rows[i];
      os << (i ? "," : "") << "{\"horizon\":" << r.horizon
         << ",\"mse\":" << r.mse << ",\"failure_rate\":" << r.failure_rate
         << "}";
    }
    os << "]}\n";
    emit(os.str(), ev_out);
    return 0;
  }

  if (*c_da) {
    std::optional<int> n_users;
    Network net;
    if (!da_network.empty()) {
      net = read_network(da_network);
      n_users = net.n_users();
    }
    const EventLog log = read_event_log(da_log);
    if (da_network.empty()) {
      int mx = -1;
      for (const Event& e : log.events) mx = std::max(mx, e.u);
      net = Network(mx + 1, {});
    }
    const DatasetStats s = dataset_stats(log, net);
    std::cout << "users           " << s.n_users << "\n"
              << "edges           " << s.n_edges << "\n"
              << "events          " << s.n_events << "\n"
              << "first event t   " << s.t_first << "\n"
              << "last event t    " << s.t_last << "\n"
              << "events per user " << s.events_per_user << "\n"
              << "mean sentiment  " << s.mean_mark << "\n"
              << "std sentiment   " << s.std_mark << "\n";
    if (!da_plot.empty())
      write_plot_data(
          running_average(log, parse_duration(da_window), "sentiment"),
          da_plot);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
