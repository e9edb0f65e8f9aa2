// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>
#include "lor/common.hpp"

namespace lor
{

// Compressed sparse row matrix. Column indices are sorted and unique within each row;
// explicit zeros are kept unless pruned.
struct CsrMatrix
{
  int n_rows = 0, n_cols = 0;
  std::vector<int> I{0};
  std::vector<int> J;
  std::vector<double> A;

  long Nnz() const { return static_cast<long>(J.size()); }
  int RowNnz(int i) const { return I[i + 1] - I[i]; }
  // Value at (i, j), zero if not stored.
  double Get(int i, int j) const;
  // Throws if the structural invariants do not hold.
  void Validate() const;

  static CsrMatrix Identity(int n);
  // Build from (row, col, value) triplets; duplicates are summed.
  static CsrMatrix FromTriplets(int n_rows, int n_cols, std::vector<int> rows,
                                std::vector<int> cols, std::vector<double> vals);
  static CsrMatrix FromDense(int n_rows, int n_cols, std::span<const double> dense);
  std::vector<double> ToDense() const;
};

void Spmv(const CsrMatrix &A, std::span<const double> x, std::span<double> y);
Vector Spmv(const CsrMatrix &A, std::span<const double> x);
void SpmvTranspose(const CsrMatrix &A, std::span<const double> x, std::span<double> y);
Vector SpmvTranspose(const CsrMatrix &A, std::span<const double> x);

CsrMatrix Transpose(const CsrMatrix &A);

// C = A B, two-pass (symbolic, numeric) row-wise product. Entries that cancel to zero are
// kept unless prune_zeros is set.
CsrMatrix Spgemm(const CsrMatrix &A, const CsrMatrix &B, bool prune_zeros = false);

// P^T A P. When A is symmetric the result is symmetrized by averaging with its transpose.
CsrMatrix Rap(const CsrMatrix &P, const CsrMatrix &A, bool symmetric = true);

CsrMatrix Add(const CsrMatrix &A, const CsrMatrix &B, double alpha = 1.0, double beta = 1.0);

// max |A_ij - A_ji|.
double SymmetryError(const CsrMatrix &A);
double MaxAbs(const CsrMatrix &A);

CsrMatrix PruneZeros(const CsrMatrix &A);

// Sparse Cholesky factorization P A P^T = L L^T with an approximate minimum degree
// ordering. L is stored by columns.
struct CholeskyFactor
{
  int n = 0;
  std::vector<int> perm;      // perm[k] = original index of pivot k
  std::vector<int> iperm;
  std::vector<int> Lp, Li;    // compressed sparse column layout of L
  std::vector<double> Lx;

  long FactorNnz() const { return static_cast<long>(Li.size()); }
};

CholeskyFactor CholeskyFactorize(const CsrMatrix &A);
void CholeskySolve(const CholeskyFactor &F, std::span<const double> b, std::span<double> x);
Vector CholeskySolve(const CholeskyFactor &F, std::span<const double> b);

using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct LanczosResult
{
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  int iterations = 0;
  bool breakdown = false;
};

// Extreme Ritz values of a symmetric operator M after `iters` Lanczos steps with full
// reorthogonalization. If `gram` is given, M must be self-adjoint in the inner product
// <u, v> = u^T G v (e.g. M = B^-1 A with G = B).
LanczosResult LanczosExtremes(const LinearOperator &M, int n, int iters,
                              const LinearOperator &gram = nullptr, unsigned seed = 1234);

// Extreme eigenvalues of the symmetric tridiagonal matrix with the given diagonal and
// off-diagonal.
std::pair<double, double> TridiagonalExtremes(std::span<const double> diag,
                                              std::span<const double> off);

// MatrixMarket coordinate format, "%%MatrixMarket matrix coordinate real general".
void WriteMatrixMarket(const CsrMatrix &A, const std::string &path);
CsrMatrix ReadMatrixMarket(const std::string &path);

}  // namespace lor
