// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>
#include "lor/pa.hpp"
#include "lor/spaces.hpp"
#include "lor/sparse.hpp"

namespace lor
{

// Quadrature on each LOR subelement.
enum class LorQuadrature
{
  Vertex,  // 2^d points at the subelement vertices
  Gauss    // tensor 2-point Gauss-Legendre
};

// Macro-element block storage of the LOR matrix. Every macro element has the same sparsity
// pattern: row i (a local DOF) couples to the local DOFs J_hat[i * nnz_per_row + k], valid
// entries first in increasing order, then -1 padding. Values live in
// A_hat[(e * ndof_per_el + i) * nnz_per_row + k].
struct MacroBlockCSR
{
  SpaceKind kind = SpaceKind::H1;
  int dim = 2;
  int p = 1;
  int n_el = 0;
  int ndof_per_el = 0;
  int nnz_per_row = 0;
  std::vector<int> J_hat;
  std::vector<double> A_hat;

  int RowLength(int i) const;
  // Position k of column j in row i of J_hat, or -1.
  int Find(int i, int j) const;
};

struct SharedSparsity
{
  int ndof_per_el = 0;
  int nnz_per_row = 0;
  std::vector<int> J_hat;
};

SharedSparsity BuildSharedSparsity(SpaceKind kind, int p, int dim);

// Local DOFs of LOR subelement s (lexicographic index) in the low-order reference ordering:
// vertices (H1), local edges (ND) or local facets (RT) of the subelement.
std::vector<int> SubelementDofs(SpaceKind kind, int p, int dim, int s);

struct LorOptions
{
  LorQuadrature quadrature = LorQuadrature::Vertex;
};

MacroBlockCSR AssembleMacroBlocks(const FESpace &space, const Form &form,
                                  const LorOptions &opts = {});

// Global (L-vector) CSR matrix from macro blocks. Each (row, col) entry is written once, by
// the lowest-indexed macro element containing both DOFs, and holds the sum over all macro
// elements sharing them. Rows are sorted.
CsrMatrix AssembleLocalCsr(const MacroBlockCSR &blocks, const Restriction &r);

CsrMatrix AssembleLor(const FESpace &space, const Form &form, const LorOptions &opts = {});

// Variational restriction Lambda^T A Lambda.
CsrMatrix AssembleWithConstraints(const CsrMatrix &A, const ConstraintMatrix &c);

struct EliminationData
{
  std::vector<int> ess;
  CsrMatrix Ae;  // eliminated columns: Ae(i, j) = A(i, j) for j essential, i not essential

  bool Empty() const { return ess.empty(); }
};

// Remove essential rows and columns, setting their diagonal entries to 1.
CsrMatrix EliminateEssentialBcs(const CsrMatrix &A, std::span<const int> ess,
                                EliminationData &data);

// b_i -= sum_j Ae_ij g_j for non-essential i; b_i = g_i for essential i.
void EliminateRhs(const EliminationData &data, std::span<const double> g, std::span<double> b);

}  // namespace lor
