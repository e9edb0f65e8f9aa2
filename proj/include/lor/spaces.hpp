// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <set>
#include <vector>
#include "lor/basis.hpp"
#include "lor/mesh.hpp"
#include "lor/sparse.hpp"

namespace lor
{

enum class SpaceKind
{
  H1,
  ND,
  RT
};

const char *SpaceKindName(SpaceKind kind);

// One local degree of freedom of the reference macro element. `dbl` holds the position in
// doubled lattice coordinates 0..2p: H1 DOFs sit at even coordinates (Gauss-Lobatto
// subvertices), ND component c DOFs are odd along c (subedges), RT component c DOFs are even
// along c and odd elsewhere (subfaces).
struct LocalDof
{
  int comp = 0;
  std::array<int, 3> dbl{0, 0, 0};
};

// Local DOFs in E-vector order: component-major, lexicographic (x fastest) within each
// component. ND component c has shape p along c and p+1 elsewhere; RT component c has
// p+1 along c and p elsewhere.
std::vector<LocalDof> LocalDofs(SpaceKind kind, int dim, int p);

// Per-component tensor shape of the local DOF lattice.
std::array<int, 3> ComponentShape(SpaceKind kind, int dim, int p, int comp);
int NumComponents(SpaceKind kind, int dim);

// Whether component `comp` uses the closed (Gauss-Lobatto Lagrange) basis along `axis`; the
// other directions use the open basis.
bool ClosedAlong(SpaceKind kind, int comp, int axis);

// Inverse of LocalDofs: E-vector index of the DOF of component `comp` at doubled lattice
// position `dbl`.
int LocalDofIndex(SpaceKind kind, int dim, int p, int comp, const std::array<int, 3> &dbl);

// Element restriction (L-vector to E-vector gather) with orientation signs.
struct Restriction
{
  int n_el = 0;
  int ndof_per_el = 0;
  int n_dofs = 0;
  std::vector<int> element_map;    // [e * ndof_per_el + i] -> global DOF
  std::vector<signed char> signs;  // matching +1 / -1
  // Transpose (scatter) structure: for global DOF g, the E-vector slots
  // indices[offsets[g]..offsets[g+1]) in increasing order.
  std::vector<int> offsets;
  std::vector<int> indices;

  int Multiplicity(int g) const { return offsets[g + 1] - offsets[g]; }
};

struct FESpace
{
  SpaceKind kind = SpaceKind::H1;
  int p = 1;
  int dim = 2;
  const MacroMesh *mesh = nullptr;  // not owned; must outlive the space
  int n_dofs = 0;
  int ndof_per_el = 0;
  std::vector<LocalDof> local_dofs;
  Restriction restriction;
};

FESpace BuildSpace(const MacroMesh &mesh, SpaceKind kind, int p);

// x (L-vector, n_dofs) -> e (E-vector, n_el * ndof_per_el) with signs.
void RestrictionApply(const Restriction &r, std::span<const double> x, std::span<double> e);
Vector RestrictionApply(const Restriction &r, std::span<const double> x);
// Signed scatter-add. Each global entry is summed in increasing E-vector slot order.
void RestrictionApplyTranspose(const Restriction &r, std::span<const double> e,
                               std::span<double> x);
Vector RestrictionApplyTranspose(const Restriction &r, std::span<const double> e);

// Sorted unique DOFs on boundary facets with the given attributes. An empty attribute set
// selects every boundary facet.
std::vector<int> BoundaryDofs(const FESpace &space, const std::set<int> &attrs = {});

// Hanging-node constraints for an H1 space on the leaf mesh of a 2D nonconforming mesh:
// x_unconstrained = Lambda x_true.
struct ConstraintMatrix
{
  CsrMatrix Lambda;               // n_unconstrained x n_true
  std::vector<int> true_to_full;  // true DOF -> unconstrained DOF
  std::vector<int> full_to_true;  // unconstrained DOF -> true DOF or -1 for slaves
  std::vector<int> slave_dofs;    // sorted

  int NumTrue() const { return static_cast<int>(true_to_full.size()); }
};

ConstraintMatrix BuildNcConstraints(const NcMesh2D &nc, const FESpace &leaf_space);

// True-DOF list selected from a list of unconstrained DOFs (slaves dropped).
std::vector<int> RestrictToTrue(const ConstraintMatrix &c, std::span<const int> full_dofs);

}  // namespace lor
