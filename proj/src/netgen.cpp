#include "opidyn/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace opidyn {

namespace {

double pair_probability(const std::array<double, 4>& seed, int scale, int i,
                        int j) {
  double p = 1.0;
  for (int l = 0; l < scale; ++l) {
    const int bi = (i >> l) & 1;
    const int bj = (j >> l) & 1;
    p *= seed[2 * bi + bj];
  }
  return p;
}

}  // namespace

Network kronecker_graph(const KroneckerSpec& spec) {
  if (spec.scale < 0 || spec.scale > 14)
    throw std::invalid_argument("kronecker: scale outside [0, 14]");
  for (double s : spec.seed)
    if (!(s >= 0) || !(s <= 1))
      throw std::invalid_argument("kronecker: seed entries must be in [0, 1]");

  const int n = 1 << spec.scale;
  Rng rng = make_stream(spec.rng_seed, 0);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;  // follow graph carries no self-edges
      if (uniform01(rng) < pair_probability(spec.seed, spec.scale, i, j))
        edges.emplace_back(i, j);
    }
  }
  return Network(n, std::move(edges));
}

double kronecker_expected_edges(const KroneckerSpec& spec) {
  // sum over all pairs = (sum of seed)^scale; subtract the diagonal mass
  const double total = std::pow(
      spec.seed[0] + spec.seed[1] + spec.seed[2] + spec.seed[3], spec.scale);
  const double diag = std::pow(spec.seed[0] + spec.seed[3], spec.scale);
  return total - diag;
}

ModelParams gen_params(const Network& net, const ParamGenSpec& spec) {
  if (!(spec.omega > 0) || !(spec.nu > 0) || !(spec.sigma > 0))
    throw std::invalid_argument("paramgen: rates and sigma must be positive");
  if (spec.hawkes_fraction < 0 || spec.hawkes_fraction > 1)
    throw std::invalid_argument("paramgen: hawkes_fraction outside [0, 1]");
  if (spec.mu_lo < 0 || spec.mu_hi < spec.mu_lo || spec.b_lo < 0 ||
      spec.b_hi < spec.b_lo || spec.b_scale < 0)
    throw std::invalid_argument("paramgen: bad uniform range");

  const int n = net.n_users();
  Rng rng = make_stream(spec.rng_seed, 1);

  ModelParams p;
  p.omega = spec.omega;
  p.nu = spec.nu;
  p.alpha.resize(n);
  p.mu.resize(n);
  p.sigma = Vec::Constant(n, spec.sigma);

  for (int u = 0; u < n; ++u)
    p.alpha[u] = spec.alpha_mean + spec.alpha_std * normal01(rng);

  std::vector<Eigen::Triplet<double>> ta;
  for (int u = 0; u < n; ++u)
    for (int v : net.followees(u))
      ta.emplace_back(u, v, spec.a_mean + spec.a_std * normal01(rng));

  for (int u = 0; u < n; ++u)
    p.mu[u] = uniform_in(rng, spec.mu_lo, spec.mu_hi);

  // pick round(fraction * n) distinct self-exciting users
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(uniform01(rng) * (i + 1));
    std::swap(order[i], order[std::min(j, i)]);
  }
  const int n_hawkes =
      static_cast<int>(std::lround(spec.hawkes_fraction * n));
  std::vector<char> excited(n, 0);
  for (int i = 0; i < n_hawkes; ++i) excited[order[i]] = 1;

  std::vector<Eigen::Triplet<double>> tb;
  for (int u = 0; u < n; ++u) {
    if (!excited[u]) continue;
    tb.emplace_back(u, u,
                    spec.b_scale * uniform_in(rng, spec.b_lo, spec.b_hi));
    for (int v : net.followees(u))
      tb.emplace_back(u, v,
                      spec.b_scale * uniform_in(rng, spec.b_lo, spec.b_hi));
  }

  p.A.resize(n, n);
  p.B.resize(n, n);
  p.A.setFromTriplets(ta.begin(), ta.end());
  p.B.setFromTriplets(tb.begin(), tb.end());
  p.validate(net);
  return p;
}

}  // namespace opidyn
