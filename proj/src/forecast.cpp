#include "opidyn/forecast.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "opidyn/parallel.hpp"
#include "opidyn/rng.hpp"
#include "opidyn/simulate.hpp"

namespace opidyn {

ForecastState reconstruct_state(const EventLog& log, const ModelParams& p,
                                const Network& net, double t0) {
  log.validate(net.n_users());
  const int n = net.n_users();
  MarkovState st = state_at(log, p, net, t0);
  ForecastState fs;
  fs.t0 = t0;
  fs.x0.resize(n);
  fs.eta0.resize(n);
  for (int u = 0; u < n; ++u) {
    fs.x0[u] = st.opinion_at(u, t0, p);
    fs.eta0[u] = st.intensity_at(u, t0, p);
  }
  return fs;
}

Vec expm_action(const SparseMat& M, const Vec& v, double t) {
  const Eigen::Index n = M.rows();
  if (M.cols() != n) throw std::invalid_argument("expm_action: matrix not square");
  if (v.size() != n) throw std::invalid_argument("expm_action: size mismatch");
  if (!(t >= 0) || !std::isfinite(t))
    throw std::invalid_argument("expm_action: time must be finite and >= 0");
  if (t == 0 || n == 0) return v;

  // Trace shift keeps the Taylor terms of the remainder small and removes
  // the dominant decay scale from the series.
  double trace = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) trace += M.coeff(i, i);
  const double c = trace / static_cast<double>(n);

  // 1-norm of t (M - c I) decides how many squaring-free substeps keep the
  // per-step norm at ~2, where the series converges in a couple dozen terms.
  double norm1 = 0.0;
  for (Eigen::Index col = 0; col < n; ++col) {
    double s = 0.0;
    bool saw_diag = false;
    for (SparseMat::InnerIterator it(M, col); it; ++it) {
      if (it.row() == col) {
        s += std::abs(it.value() - c);
        saw_diag = true;
      } else {
        s += std::abs(it.value());
      }
    }
    if (!saw_diag) s += std::abs(c);
    norm1 = std::max(norm1, s);
  }
  norm1 *= t;
  const double steps_d = std::max(1.0, std::ceil(norm1 / 2.0));
  if (steps_d > 1e7)
    throw std::invalid_argument("expm_action: |M| t too large to integrate");
  const std::int64_t steps = static_cast<std::int64_t>(steps_d);
  const double h = t / steps_d;
  const double scale = std::exp(c * h);

  Vec w = v;
  Vec term(n), tmp(n);
  for (std::int64_t s = 0; s < steps; ++s) {
    term = w;
    Vec sum = w;
    bool prev_small = false;
    for (int k = 1; k <= 64; ++k) {
      tmp.noalias() = M * term;
      term = (h / k) * tmp - (c * h / k) * term;
      sum += term;
      const bool small =
          term.lpNorm<Eigen::Infinity>() <=
          1e-16 * std::max(sum.lpNorm<Eigen::Infinity>(), 1e-300);
      if (small && prev_small) break;
      prev_small = small;
    }
    w = sum * scale;
  }
  return w;
}

namespace {

// Restarted GMRES, modified Gram-Schmidt Arnoldi with Givens rotations.
// Returns true when the absolute residual reaches tol_abs.
bool gmres(const SparseMat& M, const Vec& b, Vec& x, double tol_abs,
           int restart, int max_outer) {
  const Eigen::Index n = b.size();
  const int m = static_cast<int>(std::min<Eigen::Index>(restart, n));
  Vec r = b - M * x;
  double beta = r.norm();
  if (beta <= tol_abs) return true;
  for (int outer = 0; outer < max_outer; ++outer) {
    Eigen::MatrixXd V(n, m + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    std::vector<double> cs(m), sn(m);
    Vec g = Vec::Zero(m + 1);
    V.col(0) = r / beta;
    g[0] = beta;
    int k = 0;
    for (; k < m; ++k) {
      Vec w = M * V.col(k);
      for (int i = 0; i <= k; ++i) {
        H(i, k) = V.col(i).dot(w);
        w -= H(i, k) * V.col(i);
      }
      H(k + 1, k) = w.norm();
      const bool happy = H(k + 1, k) <= 1e-300;
      if (!happy) V.col(k + 1) = w / H(k + 1, k);
      for (int i = 0; i < k; ++i) {
        const double tmp = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
        H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = tmp;
      }
      const double denom = std::hypot(H(k, k), H(k + 1, k));
      if (denom == 0) break;  // singular leading block
      cs[k] = H(k, k) / denom;
      sn[k] = H(k + 1, k) / denom;
      H(k, k) = denom;
      H(k + 1, k) = 0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      if (std::abs(g[k + 1]) <= tol_abs || happy) {
        ++k;
        break;
      }
    }
    if (k == 0) return false;
    const Vec y = H.topLeftCorner(k, k)
                      .triangularView<Eigen::Upper>()
                      .solve(g.head(k));
    x += V.leftCols(k) * y;
    r = b - M * x;
    beta = r.norm();
    if (beta <= tol_abs) return true;
  }
  return false;
}

SparseMat drift_matrix(const ModelParams& p) {
  const int n = p.n_users();
  SparseMat M = p.A * p.mu.asDiagonal();
  SparseMat I(n, n);
  I.setIdentity();
  M -= p.omega * I;
  return M;
}

}  // namespace

Vec solve_linear(const SparseMat& M, const Vec& b) {
  const Eigen::Index n = M.rows();
  if (M.cols() != n) throw std::invalid_argument("solve_linear: matrix not square");
  if (b.size() != n) throw std::invalid_argument("solve_linear: size mismatch");
  const double bnorm = b.norm();
  Vec x = Vec::Zero(n);
  if (bnorm == 0) return x;

  const double tol = 1e-10;
  gmres(M, b, x, 0.1 * tol * bnorm, /*restart=*/60, /*max_outer=*/50);
  double res = (M * x - b).norm() / bnorm;
  if (res <= tol) return x;

  if (n <= 500) {
    const Eigen::MatrixXd dense(M);
    Vec xd = dense.partialPivLu().solve(b);
    const double resd = (M * xd - b).norm() / bnorm;
    if (resd <= tol) return xd;
    res = std::min(res, resd);
  }
  throw solve_error("solve_linear: residual stalled at " + std::to_string(res),
                    res);
}

ForecastResult forecast_poisson(const ForecastState& fs, const ModelParams& p,
                                double t) {
  const int n = p.n_users();
  if (!(t >= fs.t0))
    throw std::invalid_argument("forecast: target precedes state time");
  const double dt = t - fs.t0;
  const SparseMat M = drift_matrix(p);

  ForecastResult out;
  out.t = t;
  out.method = ForecastMethod::poisson_analytic;
  const Vec term1 = expm_action(M, fs.x0, dt);
  try {
    const Vec w = expm_action(M, p.alpha, dt) - p.alpha;
    out.mean = term1 + p.omega * solve_linear(M, w);
  } catch (const solve_error&) {
    // Singular drift: fall back to the integral form
    // int_0^dt exp(M s) (omega alpha) ds via one augmented exponential.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(M.nonZeros() + n);
    for (int col = 0; col < n; ++col)
      for (SparseMat::InnerIterator it(M, col); it; ++it)
        trip.emplace_back(static_cast<int>(it.row()), col, it.value());
    for (int u = 0; u < n; ++u)
      if (p.alpha[u] != 0) trip.emplace_back(u, n, p.omega * p.alpha[u]);
    SparseMat aug(n + 1, n + 1);
    aug.setFromTriplets(trip.begin(), trip.end());
    Vec e = Vec::Zero(n + 1);
    e[n] = 1.0;
    out.mean = term1 + expm_action(aug, e, dt).head(n);
  }
  return out;
}

Vec expected_intensity(const ForecastState& fs, const ModelParams& p,
                       double t) {
  if (!is_diagonal(p.B))
    throw std::invalid_argument(
        "expected_intensity: closed form needs diagonal B; use forecast_mc");
  if (!(t >= fs.t0))
    throw std::invalid_argument("expected_intensity: target precedes state");
  const int n = p.n_users();
  const double dt = t - fs.t0;
  Vec out(n);
  for (int u = 0; u < n; ++u) {
    const double z = (p.B.coeff(u, u) - p.nu) * dt;
    const double phi1 = std::abs(z) < 1e-8 ? 1.0 + z / 2.0 + z * z / 6.0
                                           : std::expm1(z) / z;
    out[u] = std::exp(z) * fs.eta0[u] + p.nu * p.mu[u] * dt * phi1;
  }
  return out;
}

ForecastResult forecast_hawkes(const ForecastState& fs, const ModelParams& p,
                               double t, double step) {
  if (!is_diagonal(p.B))
    throw std::invalid_argument(
        "forecast_hawkes: cross-excitation has no closed mean; use forecast_mc");
  if (!(step > 0)) throw std::invalid_argument("forecast_hawkes: step <= 0");
  if (!(t >= fs.t0))
    throw std::invalid_argument("forecast: target precedes state time");

  const double dt = t - fs.t0;
  const auto nsteps = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(dt / step)));
  const double h = dt / static_cast<double>(nsteps);

  const auto deriv = [&](double tau, const Vec& x) -> Vec {
    const Vec lam = expected_intensity(fs, p, tau);
    Vec dx = p.A * lam.cwiseProduct(x);
    dx.noalias() -= p.omega * x;
    dx.noalias() += p.omega * p.alpha;
    return dx;
  };

  Vec x = fs.x0;
  double tau = fs.t0;
  for (std::int64_t i = 0; i < nsteps; ++i) {
    const Vec k1 = deriv(tau, x);
    const Vec k2 = deriv(tau + h / 2, x + (h / 2) * k1);
    const Vec k3 = deriv(tau + h / 2, x + (h / 2) * k2);
    const Vec k4 = deriv(tau + h, x + h * k3);
    x += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    tau = fs.t0 + h * static_cast<double>(i + 1);
  }

  ForecastResult out;
  out.t = t;
  out.mean = std::move(x);
  out.method = ForecastMethod::hawkes_ode;
  return out;
}

StabilityReport steady_state(const ModelParams& p, Regime regime) {
  const int n = p.n_users();
  StabilityReport rep;
  rep.regime = regime;
  rep.threshold = p.omega;

  Vec lam;
  bool gate = true;
  if (regime == Regime::poisson) {
    lam = p.mu;
  } else {
    for (int u = 0; u < n; ++u)
      if (p.B.coeff(u, u) >= p.nu) gate = false;  // no stationary intensity
    SparseMat S = -(p.B / p.nu);
    SparseMat I(n, n);
    I.setIdentity();
    S += I;
    lam = solve_linear(S, p.mu);
    rep.stationary_intensity = lam;
  }

  const Eigen::MatrixXd drift = Eigen::MatrixXd(p.A) * lam.asDiagonal();
  if (n > 0) {
    const Eigen::EigenSolver<Eigen::MatrixXd> eig(drift, false);
    rep.statistic = eig.eigenvalues().real().maxCoeff();
  }
  rep.stable = gate && rep.statistic < p.omega;
  if (rep.stable) {
    SparseMat S = p.A * (lam / p.omega).asDiagonal();
    SparseMat I(n, n);
    I.setIdentity();
    SparseMat lhs = SparseMat(I) - S;
    rep.steady_state = solve_linear(lhs, p.alpha);
  }
  return rep;
}

Eigen::MatrixXd covariance_dynamics(const ForecastState& fs,
                                    const ModelParams& p, double t,
                                    double step, int n_cap) {
  const int n = p.n_users();
  if (p.B.nonZeros() != 0)
    throw std::invalid_argument(
        "covariance_dynamics: closed flow holds without self-excitation; "
        "use forecast_mc for the variance");
  if (n > n_cap)
    throw std::invalid_argument(
        "covariance_dynamics: dense n^2 flow capped at n=" +
        std::to_string(n_cap) + "; use forecast_mc for the variance");
  if (!(step > 0)) throw std::invalid_argument("covariance_dynamics: step <= 0");
  if (!(t >= fs.t0))
    throw std::invalid_argument("forecast: target precedes state time");

  const Eigen::MatrixXd A = Eigen::MatrixXd(p.A);
  const Eigen::MatrixXd M =
      A * p.mu.asDiagonal() - p.omega * Eigen::MatrixXd::Identity(n, n);

  const auto mean_dot = [&](const Vec& m) -> Vec {
    return M * m + p.omega * p.alpha;
  };
  const auto cov_dot = [&](const Eigen::MatrixXd& G,
                           const Vec& m) -> Eigen::MatrixXd {
    const Vec d =
        (p.sigma.array().square() + G.diagonal().array() + m.array().square()) *
        p.mu.array();
    Eigen::MatrixXd out = M * G + G * M.transpose();
    out.noalias() += A * d.asDiagonal() * A.transpose();
    return out;
  };

  const double dt = t - fs.t0;
  const auto nsteps = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(dt / step)));
  const double h = dt / static_cast<double>(nsteps);

  Vec m = fs.x0;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  for (std::int64_t i = 0; i < nsteps; ++i) {
    const Vec km1 = mean_dot(m);
    const Eigen::MatrixXd kg1 = cov_dot(G, m);
    const Vec km2 = mean_dot(m + (h / 2) * km1);
    const Eigen::MatrixXd kg2 = cov_dot(G + (h / 2) * kg1, m + (h / 2) * km1);
    const Vec km3 = mean_dot(m + (h / 2) * km2);
    const Eigen::MatrixXd kg3 = cov_dot(G + (h / 2) * kg2, m + (h / 2) * km2);
    const Vec km4 = mean_dot(m + h * km3);
    const Eigen::MatrixXd kg4 = cov_dot(G + h * kg3, m + h * km3);
    m += (h / 6) * (km1 + 2 * km2 + 2 * km3 + km4);
    G += (h / 6) * (kg1 + 2 * kg2 + 2 * kg3 + kg4);
    G = ((G + G.transpose()) / 2).eval();
  }
  return G;
}

namespace {

Eigen::MatrixXd kron_dense(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  Eigen::MatrixXd K(X.rows() * Y.rows(), X.cols() * Y.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      K.block(i * Y.rows(), j * Y.cols(), Y.rows(), Y.cols()) = X(i, j) * Y;
  return K;
}

}  // namespace

StabilityReport covariance_stability(const ModelParams& p, int n_cap) {
  const int n = p.n_users();
  if (p.B.nonZeros() != 0)
    throw std::invalid_argument(
        "covariance_stability: defined without self-excitation");
  if (n > n_cap)
    throw std::invalid_argument("covariance_stability: dense n^4 test capped");

  const Eigen::MatrixXd A = Eigen::MatrixXd(p.A);
  const Eigen::MatrixXd M =
      A * p.mu.asDiagonal() - p.omega * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

  Eigen::MatrixXd K = kron_dense(I, M) + kron_dense(M, I);
  const Eigen::MatrixXd AA = kron_dense(A, A);
  for (int i = 0; i < n; ++i)
    K.col(i * (n + 1)) += p.mu[i] * AA.col(i * (n + 1));

  StabilityReport rep;
  rep.regime = Regime::poisson;
  rep.threshold = 0.0;
  const Eigen::EigenSolver<Eigen::MatrixXd> eig(K, false);
  rep.statistic = eig.eigenvalues().real().maxCoeff();
  rep.stable = rep.statistic < 0.0;
  return rep;
}

std::int64_t mc_sample_size(double eps, double delta, double sigma2_max,
                            double x_max) {
  if (!(eps > 0)) throw std::invalid_argument("mc_sample_size: eps <= 0");
  if (!(delta > 0) || !(delta < 1))
    throw std::invalid_argument("mc_sample_size: delta outside (0,1)");
  if (sigma2_max < 0 || x_max < 0)
    throw std::invalid_argument("mc_sample_size: negative moment bound");
  const double bound = (6.0 * sigma2_max + 4.0 * x_max * eps) *
                       std::log(2.0 / delta) / (3.0 * eps * eps);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(bound)));
}

ForecastResult forecast_mc(const EventLog& log, const ModelParams& p,
                           const Network& net, double t0, double t,
                           const McConfig& cfg) {
  if (!(t >= t0))
    throw std::invalid_argument("forecast: target precedes state time");
  p.validate(net);
  log.validate(net.n_users());
  const int n = net.n_users();
  const MarkovState base = state_at(log, p, net, t0);

  const auto one_run = [&](std::uint64_t stream, Vec& out) {
    MarkovState st = base;
    SimConfig sc;
    sc.horizon = t;
    sc.rng_seed = derive_seed(cfg.seed, stream);
    sc.sentiment = cfg.sentiment;
    simulate_from(st, net, p, sc);
    out.resize(n);
    for (int u = 0; u < n; ++u) out[u] = st.opinion_at(u, t, p);
  };

  std::int64_t runs;
  if (cfg.runs) {
    runs = *cfg.runs;
    if (runs < 1) throw std::invalid_argument("forecast_mc: runs < 1");
  } else {
    // pilot batch sizes the real batch through the concentration bound
    const int pr = std::max(cfg.pilot_runs, 2);
    Eigen::MatrixXd pilot(n, pr);
    parallel_for(
        static_cast<std::size_t>(pr),
        [&](std::size_t l) {
          Vec col;
          one_run((1ull << 40) + l, col);
          pilot.col(static_cast<Eigen::Index>(l)) = col;
        },
        cfg.threads);
    const Vec mean = pilot.rowwise().mean();
    const Vec var = (pilot.colwise() - mean).rowwise().squaredNorm() /
                    static_cast<double>(pr - 1);
    const double sigma2_max = n > 0 ? var.maxCoeff() : 0.0;
    const double x_max =
        n > 0 ? pilot.cwiseAbs().maxCoeff() : 0.0;
    runs = mc_sample_size(cfg.eps, cfg.delta, sigma2_max, x_max);
    if (runs > 1'000'000)
      throw std::runtime_error(
          "forecast_mc: auto-sized run count exceeds 1e6; pass runs "
          "explicitly");
  }

  Eigen::MatrixXd samples(n, runs);
  parallel_for(
      static_cast<std::size_t>(runs),
      [&](std::size_t l) {
        Vec col;
        one_run(l, col);
        samples.col(static_cast<Eigen::Index>(l)) = col;
      },
      cfg.threads);

  ForecastResult out;
  out.t = t;
  out.method = ForecastMethod::monte_carlo;
  out.mc_runs = static_cast<int>(runs);
  out.mean = samples.rowwise().mean();
  if (runs > 1) {
    out.variance = (samples.colwise() - out.mean).rowwise().squaredNorm() /
                   static_cast<double>(runs - 1);
  } else {
    out.variance = Vec::Zero(n);
  }
  return out;
}

}  // namespace opidyn
