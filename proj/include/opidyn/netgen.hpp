#pragma once
#include <array>
#include <cstdint>

#include "opidyn/types.hpp"

namespace opidyn {

// Stochastic Kronecker graph on 2^scale nodes. The directed edge (i, j)
// appears independently with probability prod_l seed[bit_l(i)][bit_l(j)]
// over the `scale` bit positions; self-loops are discarded. Exact sampling,
// one Bernoulli per ordered pair: O(4^scale), fine through scale 14.
struct KroneckerSpec {
  std::array<double, 4> seed{0.96, 0.3, 0.3, 0.96};  // row-major 2x2
  int scale = 6;
  std::uint64_t rng_seed = 0;
};

Network kronecker_graph(const KroneckerSpec& spec);

// Expected edge count (excluding self-loops); oracle for the sampler.
double kronecker_expected_edges(const KroneckerSpec& spec);

// Synthetic model parameters over a given graph:
//   alpha ~ N(alpha_mean, alpha_std)   A(u,v) ~ N(a_mean, a_std) on edges
//   mu ~ U(mu_lo, mu_hi)               B entries ~ U(b_lo, b_hi)
// A share hawkes_fraction of users (chosen uniformly) get self-excitation:
// B filled on their in-edges and diagonal. sigma is constant.
struct ParamGenSpec {
  double alpha_mean = 0.0, alpha_std = 1.0;
  double a_mean = 0.0, a_std = 1.0;
  double mu_lo = 0.0, mu_hi = 1.0;
  double b_lo = 0.0, b_hi = 1.0;
  double b_scale = 1.0;  // multiplies every B draw; < 1 tames supercritical nets
  double hawkes_fraction = 1.0;
  double omega = 100.0;
  double nu = 1.0;
  double sigma = 0.1;
  std::uint64_t rng_seed = 0;
};

ModelParams gen_params(const Network& net, const ParamGenSpec& spec);

}  // namespace opidyn
