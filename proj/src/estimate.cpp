#include "opidyn/estimate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "opidyn/markov.hpp"
#include "opidyn/parallel.hpp"

namespace opidyn {

FeatureTable build_features(const EventLog& log, const Network& net,
                            double omega, double nu) {
  const int n = net.n_users();
  log.validate(n);
  if (!(omega > 0) || !(nu > 0))
    throw std::invalid_argument("build_features: decay rates must be positive");

  FeatureTable table;
  table.omega = omega;
  table.nu = nu;
  table.horizon = log.horizon;
  table.users.resize(n);

  // Running kernel sums per posting user, decayed lazily at each touch so
  // the whole pass is O(events * degree).
  std::vector<double> sum_g(n, 0.0), sum_h(n, 0.0);
  std::vector<double> tg(n, 0.0), th(n, 0.0);
  auto g_at = [&](int v, double t) {
    if (t != tg[v]) {
      sum_g[v] *= std::exp(-omega * (t - tg[v]));
      tg[v] = t;
    }
    return sum_g[v];
  };
  auto h_at = [&](int v, double t) {
    if (t != th[v]) {
      sum_h[v] *= std::exp(-nu * (t - th[v]));
      th[v] = t;
    }
    return sum_h[v];
  };

  std::vector<std::vector<double>> g_rows(n), h_rows(n), targets(n);
  for (int u = 0; u < n; ++u) {
    auto& uf = table.users[u];
    uf.opinion_sources = net.followees(u);
    uf.intensity_sources.reserve(net.followees(u).size() + 1);
    uf.intensity_sources.push_back(u);
    uf.intensity_sources.insert(uf.intensity_sources.end(),
                                net.followees(u).begin(),
                                net.followees(u).end());
  }

  for (const Event& e : log.events) {
    auto& uf = table.users[e.u];
    for (int v : uf.opinion_sources) g_rows[e.u].push_back(g_at(v, e.t));
    for (int v : uf.intensity_sources) h_rows[e.u].push_back(h_at(v, e.t));
    targets[e.u].push_back(e.m);
    // fold the event into its poster's sums after using them
    g_at(e.u, e.t);
    sum_g[e.u] += e.m;
    h_at(e.u, e.t);
    sum_h[e.u] += 1.0;
  }

  std::vector<double> integral(n, 0.0);
  for (const Event& e : log.events)
    integral[e.u] += -std::expm1(-nu * (log.horizon - e.t)) / nu;

  for (int u = 0; u < n; ++u) {
    auto& uf = table.users[u];
    const Eigen::Index rows = static_cast<Eigen::Index>(targets[u].size());
    const Eigen::Index gc = static_cast<Eigen::Index>(uf.opinion_sources.size());
    const Eigen::Index hc =
        static_cast<Eigen::Index>(uf.intensity_sources.size());
    uf.g.resize(rows, gc);
    uf.h.resize(rows, hc);
    uf.target.resize(rows);
    if (rows > 0) {
      uf.g = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                      Eigen::RowMajor>>(g_rows[u].data(), rows,
                                                        gc);
      uf.h = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                      Eigen::RowMajor>>(h_rows[u].data(), rows,
                                                        hc);
      uf.target = Eigen::Map<Vec>(targets[u].data(), rows);
    }
    uf.compensator.resize(hc);
    for (Eigen::Index k = 0; k < hc; ++k)
      uf.compensator[k] = integral[uf.intensity_sources[k]];
  }
  return table;
}

std::pair<double, Vec> estimate_opinion_params(const UserFeatures& uf,
                                               double ridge) {
  if (ridge < 0) throw std::invalid_argument("opinion fit: negative ridge");
  const Eigen::Index rows = uf.g.rows();
  const Eigen::Index d = uf.g.cols() + 1;
  Eigen::MatrixXd X(rows, d);
  X.col(0).setOnes();
  X.rightCols(d - 1) = uf.g;

  if (ridge == 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < d)
      throw std::invalid_argument(
          "opinion fit: rank-deficient design; set ridge > 0 to regularize");
    Vec sol = qr.solve(uf.target);
    return {sol[0], sol.tail(d - 1)};
  }

  Eigen::MatrixXd normal = X.transpose() * X;
  normal.diagonal().array() += ridge;
  Vec sol = Eigen::LDLT<Eigen::MatrixXd>(normal).solve(X.transpose() * uf.target);
  return {sol[0], sol.tail(d - 1)};
}

double hawkes_negloglik(const Vec& x, const UserFeatures& uf, double T,
                        Vec* grad) {
  const Eigen::Index hc = uf.h.cols();
  if (x.size() != hc + 1)
    throw std::invalid_argument("intensity likelihood: bad parameter size");
  const double mu = x[0];
  const auto b = x.tail(hc);

  Vec lam = Vec::Constant(uf.h.rows(), mu);
  if (hc > 0) lam.noalias() += uf.h * b;
  if ((lam.array() <= 0).any())
    return std::numeric_limits<double>::infinity();

  double f = -lam.array().log().sum() + mu * T;
  if (hc > 0) f += b.dot(uf.compensator);
  if (grad) {
    grad->resize(hc + 1);
    const Vec inv = lam.cwiseInverse();
    (*grad)[0] = T - inv.sum();
    if (hc > 0) grad->tail(hc) = uf.compensator - uf.h.transpose() * inv;
  }
  return f;
}

SpgResult spg_estimate_intensity(const UserFeatures& uf, double T,
                                 const SpgConfig& cfg) {
  if (!(T > 0)) throw std::invalid_argument("intensity fit: horizon <= 0");
  if (!(cfg.alpha_max > 0) || !(cfg.alpha_bb0 > 0) ||
      cfg.alpha_bb0 > cfg.alpha_max || cfg.memory < 1 || !(cfg.tol > 0) ||
      !(cfg.sufficient_decrease > 0) || cfg.sufficient_decrease >= 1)
    throw std::invalid_argument("intensity fit: bad solver configuration");

  const Eigen::Index d = uf.h.cols() + 1;
  const double n_events = static_cast<double>(uf.h.rows());

  Vec x = Vec::Zero(d);
  x[0] = std::max(n_events / T, 1e-8);

  Vec grad(d);
  double f = hawkes_negloglik(x, uf, T, &grad);
  if (!std::isfinite(f))
    throw std::runtime_error("intensity fit: infeasible starting point");

  std::deque<double> recent{f};
  double alpha_bb = cfg.alpha_bb0;
  SpgResult res;

  auto pg_norm = [&](const Vec& xi, const Vec& gi) {
    return ((xi - gi).cwiseMax(0.0) - xi).lpNorm<Eigen::Infinity>();
  };

  int k = 0;
  for (; k < cfg.max_iters; ++k) {
    res.pg_norm = pg_norm(x, grad);
    if (res.pg_norm <= cfg.tol) {
      res.converged = true;
      break;
    }
    const double a = std::clamp(alpha_bb, 1e-12, cfg.alpha_max);
    Vec d_step = (x - a * grad).cwiseMax(0.0) - x;
    const double gtd = grad.dot(d_step);
    if (gtd >= 0) {  // no descent direction left at this scale
      res.converged = res.pg_norm <= cfg.tol;
      break;
    }
    const double f_ref = *std::max_element(recent.begin(), recent.end());
    double step = 1.0;
    Vec x_new;
    double f_new;
    while (true) {
      x_new = (x + step * d_step).cwiseMax(0.0);
      f_new = hawkes_negloglik(x_new, uf, T, nullptr);
      if (f_new <= f_ref + cfg.sufficient_decrease * step * gtd) break;
      step *= 0.5;
      if (step < 1e-20) { x_new = x; f_new = f; break; }
    }
    Vec grad_new(d);
    f_new = hawkes_negloglik(x_new, uf, T, &grad_new);
    const Vec s = x_new - x;
    const Vec y = grad_new - grad;
    const double sty = s.dot(y);
    alpha_bb = sty > 0 ? y.dot(y) / sty : cfg.alpha_max;
    x = std::move(x_new);
    grad = std::move(grad_new);
    f = f_new;
    recent.push_back(f);
    if (static_cast<int>(recent.size()) > cfg.memory) recent.pop_front();
  }
  res.mu = x[0];
  res.b = x.tail(d - 1);
  res.iters = k;
  res.objective = f;
  res.pg_norm = pg_norm(x, grad);
  res.converged = res.converged || res.pg_norm <= cfg.tol;
  return res;
}

EstimateResult estimate_all(const EventLog& log, const Network& net,
                            const EstimateConfig& cfg) {
  const int n = net.n_users();
  const FeatureTable table = build_features(log, net, cfg.omega, cfg.nu);

  struct UserFit {
    double alpha = 0.0, mu = 0.0, sigma = 1.0;
    Vec a, b;
    bool spg_converged = true;
    std::string error;
  };
  std::vector<UserFit> fits(n);

  parallel_for(
      static_cast<std::size_t>(n),
      [&](std::size_t ui) {
        const int u = static_cast<int>(ui);
        const UserFeatures& uf = table.users[u];
        UserFit& fit = fits[u];
        fit.a = Vec::Zero(uf.opinion_sources.size());
        fit.b = Vec::Zero(uf.intensity_sources.size());
        if (uf.target.size() == 0) {
          fit.alpha = 0.0;
          fit.mu = cfg.mu_floor;
          return;  // silent users carry no signal; keep neutral defaults
        }
        try {
          auto [alpha_u, a] = estimate_opinion_params(uf, cfg.ridge);
          fit.alpha = alpha_u;
          fit.a = std::move(a);
          Vec resid = (uf.target.array() - fit.alpha).matrix();
          resid.noalias() -= uf.g * fit.a;
          const double n_ev = static_cast<double>(uf.target.size());
          fit.sigma = std::max(std::sqrt(resid.squaredNorm() / n_ev), 1e-6);

          SpgResult spg = spg_estimate_intensity(uf, table.horizon, cfg.spg);
          fit.mu = std::max(spg.mu, cfg.mu_floor);
          fit.b = std::move(spg.b);
          fit.spg_converged = spg.converged;
        } catch (const std::exception& ex) {
          fit.error = ex.what();
          fit.alpha = 0.0;
          fit.mu = cfg.mu_floor;
          fit.a.setZero();
          fit.b.setZero();
        }
      },
      cfg.threads);

  EstimateResult out;
  out.params.omega = cfg.omega;
  out.params.nu = cfg.nu;
  out.params.alpha.resize(n);
  out.params.mu.resize(n);
  out.params.sigma.resize(n);
  std::vector<Eigen::Triplet<double>> ta, tb;
  for (int u = 0; u < n; ++u) {
    const UserFit& fit = fits[u];
    out.params.alpha[u] = fit.alpha;
    out.params.mu[u] = fit.mu;
    out.params.sigma[u] = fit.sigma;
    const UserFeatures& uf = table.users[u];
    for (Eigen::Index k = 0; k < fit.a.size(); ++k)
      if (fit.a[k] != 0) ta.emplace_back(u, uf.opinion_sources[k], fit.a[k]);
    for (Eigen::Index k = 0; k < fit.b.size(); ++k)
      if (fit.b[k] != 0) tb.emplace_back(u, uf.intensity_sources[k], fit.b[k]);
    if (!fit.error.empty()) out.failures.emplace_back(u, fit.error);
    if (!fit.spg_converged) ++out.spg_unconverged;
  }
  out.params.A.resize(n, n);
  out.params.B.resize(n, n);
  out.params.A.setFromTriplets(ta.begin(), ta.end());
  out.params.B.setFromTriplets(tb.begin(), tb.end());
  return out;
}

KernelSelection select_kernels(const EventLog& log, const Network& net,
                               const std::vector<double>& omega_grid,
                               const std::vector<double>& nu_grid,
                               const EstimateConfig& base) {
  if (omega_grid.empty() || nu_grid.empty())
    throw std::invalid_argument("kernel selection: empty grid");
  const std::size_t n_train =
      static_cast<std::size_t>(0.9 * static_cast<double>(log.size()));
  if (n_train == 0 || n_train == log.size())
    throw std::invalid_argument("kernel selection: too few events to split");

  EventLog train;
  train.events.assign(log.events.begin(), log.events.begin() + n_train);
  train.horizon = log.events[n_train].t;

  KernelSelection best;
  best.mse = std::numeric_limits<double>::infinity();
  for (double omega : omega_grid) {
    for (double nu : nu_grid) {
      EstimateConfig cfg = base;
      cfg.omega = omega;
      cfg.nu = nu;
      const ModelParams fitted = estimate_all(train, net, cfg).params;
      // one-step-ahead opinion score over the held-out tail
      MarkovState st = MarkovState::initial(fitted);
      double sse = 0.0;
      for (std::size_t i = 0; i < log.size(); ++i) {
        const Event& e = log.events[i];
        if (i >= n_train) {
          const double pred = st.opinion_at(e.u, e.t, fitted);
          sse += (pred - e.m) * (pred - e.m);
        }
        apply_jump(st, e, fitted, net);
      }
      const double mse = sse / static_cast<double>(log.size() - n_train);
      if (mse < best.mse) best = {omega, nu, mse};
    }
  }
  return best;
}

}  // namespace opidyn
