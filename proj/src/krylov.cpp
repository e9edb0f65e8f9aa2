// SPDX-License-Identifier: Apache-2.0

#include "lor/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace lor
{

std::pair<double, double> CgRitzExtremes(std::span<const double> alphas,
                                         std::span<const double> betas)
{
  const std::size_t k = alphas.size();
  Require(k >= 1 && betas.size() + 1 >= k, "CgRitzExtremes: inconsistent coefficient counts");
  Vector diag(k), off(k > 0 ? k - 1 : 0);
  for (std::size_t j = 0; j < k; j++)
  {
    diag[j] = 1.0 / alphas[j];
    if (j > 0)
    {
      diag[j] += betas[j - 1] / alphas[j - 1];
      off[j - 1] = std::sqrt(betas[j - 1]) / alphas[j - 1];
    }
  }
  return TridiagonalExtremes(diag, off);
}

SolveStats Pcg(const LinearOperator &A, const LinearOperator &B, std::span<const double> b,
               std::span<double> x, const PcgOptions &opts)
{
  Require(b.size() == x.size(), "Pcg: size mismatch");
  Require(opts.rel_tol >= 0.0 && opts.abs_tol >= 0.0 && opts.max_iters >= 0,
          "Pcg: invalid options");
  const std::size_t n = b.size();
  SolveStats st;
  Vector r(n), z(n), p(n), q(n);
  A(x, q);
  for (std::size_t i = 0; i < n; i++)
  {
    r[i] = b[i] - q[i];
  }
  double rnorm = Norm2(r);
  st.residual_history.push_back(rnorm);
  const double target = std::max(opts.rel_tol * rnorm, opts.abs_tol);
  if (rnorm <= target)
  {
    st.converged = true;
    return st;
  }
  auto precondition = [&]()
  {
    if (B)
    {
      B(r, z);
    }
    else
    {
      std::copy(r.begin(), r.end(), z.begin());
    }
  };
  precondition();
  double rz = Dot(r, z);
  if (!(rz > 0.0))
  {
    throw IndefinitePreconditionerError(
        fmt::format("Pcg: non-positive <r, Br> = {} at iteration 0", rz));
  }
  p = z;
  for (int it = 0; it < opts.max_iters; it++)
  {
    A(p, q);
    const double pq = Dot(p, q);
    Require(pq > 0.0, fmt::format("Pcg: operator is not positive definite (<p, Ap> = {})", pq));
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; i++)
    {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    st.cg_alphas.push_back(alpha);
    st.iterations = it + 1;
    rnorm = Norm2(r);
    st.residual_history.push_back(rnorm);
    if (rnorm <= target)
    {
      st.converged = true;
      break;
    }
    precondition();
    const double rz_new = Dot(r, z);
    if (!(rz_new > 0.0))
    {
      throw IndefinitePreconditionerError(
          fmt::format("Pcg: non-positive <r, Br> = {} at iteration {}", rz_new, it + 1));
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    st.cg_betas.push_back(beta);
    for (std::size_t i = 0; i < n; i++)
    {
      p[i] = z[i] + beta * p[i];
    }
  }
  if (!st.cg_alphas.empty())
  {
    const auto [lo, hi] = CgRitzExtremes(st.cg_alphas, st.cg_betas);
    st.lambda_min = lo;
    st.lambda_max = hi;
    st.kappa_estimate = std::max(1.0, hi / lo);
  }
  return st;
}

}  // namespace lor
