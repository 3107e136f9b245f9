#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "localize/spin_model.hpp"

namespace localize {

struct ModelMetadata {
  std::string generator;
  std::map<std::string, double> params;
};

struct GeneratedModel {
  SpinModel model;
  ModelMetadata metadata;
};

// Fully connected Ising couplings J_ij = beta / n for all i, j, diagonal
// included (which makes J the rank-1 matrix (beta/n) 11^T). No field.
GeneratedModel gen_curie_weiss(int n, double beta);

// Ising model on the discrete torus (Z/kZ)^d with J = beta * L^(alpha k),
// where L is the product-step kernel
//   L[x][y] = 2^{-d} prod_j 1{ x_j - y_j = +-1 mod k }.
// Requires k >= 3, d >= 1, alpha*k a positive integer, and k^d <= size_cap.
GeneratedModel gen_torus_heat_kernel(int k, int d, double alpha, double beta,
                                     Eigen::Index size_cap = 2048);

// Random d-regular simple graph via the configuration model (reshuffles on
// self-loops/multi-edges, then switch-based repair), J = (beta/d) A_G.
// Metadata records the realized second-largest |eigenvalue| of A_G.
GeneratedModel gen_expander(int n, int d, double beta, std::uint64_t seed);

}  // namespace localize
