#pragma once
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "opidyn/markov.hpp"
#include "opidyn/types.hpp"

namespace opidyn {

// Snapshot of the conditional expectations needed to forecast from t0:
// x0_u = latent opinion at t0 given the history, eta0_u = intensity at t0.
struct ForecastState {
  double t0 = 0.0;
  Vec x0;
  Vec eta0;
};

ForecastState reconstruct_state(const EventLog& log, const ModelParams& p,
                                const Network& net, double t0);

// y = exp(M t) v without forming the matrix exponential: scaling with a
// truncated, trace-shifted Taylor series. Requires t >= 0.
Vec expm_action(const SparseMat& M, const Vec& v, double t);

class solve_error : public std::runtime_error {
 public:
  solve_error(std::string what, double residual_)
      : std::runtime_error(std::move(what)), residual(residual_) {}
  double residual;
};

// Solves M x = b via restarted GMRES with a dense LU fallback for small
// systems. Guarantees ||M x - b|| / ||b|| <= 1e-10 or throws solve_error
// carrying the best residual achieved.
Vec solve_linear(const SparseMat& M, const Vec& b);

enum class ForecastMethod { poisson_analytic, hawkes_ode, monte_carlo };

struct ForecastResult {
  double t = 0.0;
  Vec mean;
  std::optional<Vec> variance;  // diagonal of the opinion covariance
  ForecastMethod method = ForecastMethod::poisson_analytic;
  std::optional<int> mc_runs;
};

// Conditional mean opinion at time t when the intensities carry no
// self-excitation (B = 0), in closed form: with M = A diag(mu) - omega I,
//   E[x(t)] = exp(M dt) x0 + omega M^{-1} (exp(M dt) - I) alpha,
// falling back to a quadrature via an augmented exponential when M is
// numerically singular.
ForecastResult forecast_poisson(const ForecastState& fs, const ModelParams& p,
                                double t);

// E[lambda(t)] for diagonal B, per user in closed form:
//   z = (b_uu - nu) dt,  E = e^z eta0_u + nu mu_u dt phi1(z),
// phi1(z) = (e^z - 1)/z. Throws if B has off-diagonal entries.
Vec expected_intensity(const ForecastState& fs, const ModelParams& p,
                       double t);

// Conditional mean under self-excitation (diagonal B): integrates
//   dE[x]/dt = (-omega I + A Lambda(t)) E[x] + omega alpha
// with classical RK4 at the given step, Lambda(t) from expected_intensity.
// Off-diagonal B is not handled analytically; throws with a pointer to the
// Monte Carlo path.
ForecastResult forecast_hawkes(const ForecastState& fs, const ModelParams& p,
                               double t, double step);

enum class Regime { poisson, hawkes };

// Stability of the mean opinion dynamics and, when stable, the limit it
// relaxes to. The drift eigenvalue test compares max Re xi(A Lambda) against
// omega, with Lambda = diag(mu) in the Poisson regime and the stationary
// intensity diag((I - B/nu)^{-1} mu) in the (diagonal-B) self-exciting
// regime; the latter additionally requires every b_uu < nu.
struct StabilityReport {
  Regime regime = Regime::poisson;
  double statistic = 0.0;  // max real part of the tested spectrum
  double threshold = 0.0;
  bool stable = false;
  std::optional<Vec> steady_state;  // (I - A Lambda / omega)^{-1} alpha
  std::optional<Vec> stationary_intensity;  // hawkes regime only
};

StabilityReport steady_state(const ModelParams& p, Regime regime);

// Opinion covariance Gamma(t) conditioned on history, Poisson regime only:
//   dGamma/dt = M Gamma + Gamma M' + A diag(sigma^2 + Gamma_ii + E[x]_i^2)
//               diag(mu) A',   M = -omega I + A diag(mu),  Gamma(t0) = 0,
// integrated jointly with E[x] by RK4. Dense in n^2; refuses n > n_cap and
// points to Monte Carlo instead.
Eigen::MatrixXd covariance_dynamics(const ForecastState& fs,
                                    const ModelParams& p, double t,
                                    double step, int n_cap = 64);

// Second-moment stability predicate for the covariance flow: max real part
// of kron(M, I) + kron(I, M) + kron(A, A) Lhat, where Lhat places mu_i at
// the (i,i) vec positions. Dense in n^4; n is capped as above.
StabilityReport covariance_stability(const ModelParams& p, int n_cap = 32);

// Smallest run count n such that the empirical mean of n independent
// trajectories is within eps of the true mean with probability 1 - delta,
// via a Bernstein bound: n >= (6 sigma2_max + 4 x_max eps) log(2/delta)
// / (3 eps^2).
std::int64_t mc_sample_size(double eps, double delta, double sigma2_max,
                            double x_max);

struct McConfig {
  std::optional<int> runs;  // fixed run count; otherwise sized from a pilot
  double eps = 0.05;
  double delta = 0.1;
  int pilot_runs = 50;
  std::uint64_t seed = 0;
  SentimentKind sentiment = SentimentKind::gaussian;
  std::optional<int> threads;
};

// Monte Carlo forecast: branches cfg.runs independent continuations of the
// history off the state at t0 and averages the latent opinions at t. When
// runs is unset, a pilot batch estimates sigma2_max and x_max and the count
// comes from mc_sample_size. Deterministic for a fixed seed (run-indexed
// streams, fixed-order reduction). variance holds per-user sample variance.
ForecastResult forecast_mc(const EventLog& log, const ModelParams& p,
                           const Network& net, double t0, double t,
                           const McConfig& cfg);

}  // namespace opidyn
