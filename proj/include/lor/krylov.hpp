// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>
#include "lor/sparse.hpp"

namespace lor
{

struct PcgOptions
{
  double rel_tol = 1e-12;
  double abs_tol = 0.0;
  int max_iters = 1000;
};

struct SolveStats
{
  int iterations = 0;
  Vector residual_history;  // ||r_k||_2, starting with the initial residual
  Vector cg_alphas;
  Vector cg_betas;
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  double kappa_estimate = 1.0;
  bool converged = false;
};

// Extreme eigenvalues of the Lanczos tridiagonal matrix associated with the first k CG
// coefficients (alphas[0..k), betas[0..k-1)).
std::pair<double, double> CgRitzExtremes(std::span<const double> alphas,
                                         std::span<const double> betas);

// Preconditioned conjugate gradient for A x = b with initial guess x. A null preconditioner
// means the identity. Converges when ||r||_2 <= max(rel_tol ||r_0||_2, abs_tol).
SolveStats Pcg(const LinearOperator &A, const LinearOperator &B, std::span<const double> b,
               std::span<double> x, const PcgOptions &opts = {});

}  // namespace lor
