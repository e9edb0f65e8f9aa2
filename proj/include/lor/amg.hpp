// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>
#include "lor/sparse.hpp"

namespace lor
{

enum class AmgSmoother
{
  SymmetricGaussSeidel,  // forward sweep before, backward sweep after the coarse correction
  Jacobi                 // damped Jacobi
};

struct AmgParams
{
  double theta = 0.25;
  int max_levels = 25;
  int coarse_size = 64;
  AmgSmoother smoother = AmgSmoother::SymmetricGaussSeidel;
  double jacobi_weight = 2.0 / 3.0;
  // Drop interpolation weights below trunc_factor * (largest weight in the row).
  bool truncate = false;
  double trunc_factor = 0.2;
  double symmetry_tol = 1e-10;  // relative to max |a_ij|
};

struct AmgLevel
{
  CsrMatrix A;
  CsrMatrix P;  // prolongation from the next coarser level (empty on the coarsest level)
  CsrMatrix R;  // P^T
  Vector inv_diag;
};

// Strong connections S_i of every row (CSR pattern, values unused).
CsrMatrix StrengthOfConnection(const CsrMatrix &A, double theta);

// Ruge-Stueben C/F splitting: 1 for coarse points, 0 for fine points.
std::vector<int> RugeStuebenSplitting(const CsrMatrix &S);

// Direct interpolation from the coarse points of the splitting.
CsrMatrix DirectInterpolation(const CsrMatrix &A, const CsrMatrix &S,
                              const std::vector<int> &cf, const AmgParams &params);

class AmgHierarchy
{
public:
  AmgHierarchy() = default;
  AmgHierarchy(const CsrMatrix &A, const AmgParams &params = {});

  int NumLevels() const { return static_cast<int>(levels_.size()); }
  const AmgLevel &Level(int l) const { return levels_[l]; }
  const CholeskyFactor &CoarseFactor() const { return coarse_; }
  const AmgParams &Params() const { return params_; }
  int Height() const { return levels_.empty() ? 0 : levels_[0].A.n_rows; }

  // sum nnz(A_l) / nnz(A_0) and sum n_l / n_0.
  double OperatorComplexity() const;
  double GridComplexity() const;

  // One V(1,1)-cycle on A x = b, updating x.
  void VCycle(std::span<const double> b, std::span<double> x) const;
  // Preconditioner application: one V-cycle from a zero initial guess.
  void Mult(std::span<const double> b, std::span<double> x) const;

  // Level sizes, nonzeros and complexities as plain text.
  std::string Report() const;

private:
  void Cycle(int l, std::span<const double> b, std::span<double> x) const;
  void Smooth(int l, std::span<const double> b, std::span<double> x, bool forward) const;

  std::vector<AmgLevel> levels_;
  CholeskyFactor coarse_;
  AmgParams params_;
  mutable std::vector<Vector> r_, bc_, xc_;
};

}  // namespace lor
