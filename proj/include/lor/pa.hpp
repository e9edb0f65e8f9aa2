// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <vector>
#include "lor/basis.hpp"
#include "lor/spaces.hpp"
#include "lor/sparse.hpp"

namespace lor
{

enum class FormKind
{
  Mass,
  Diffusion,  // H1
  CurlCurl,   // ND
  DivDiv      // RT
};

const char *FormKindName(FormKind kind);

struct FormTerm
{
  FormKind kind;
  Coefficient coeff;
};

// Bilinear form as a sum of terms, e.g. diffusion + mass for the definite Helmholtz problem.
struct Form
{
  std::vector<FormTerm> terms;

  static Form Mass(Coefficient beta);
  // Diffusion, curl-curl or div-div according to the space.
  static Form Derivative(SpaceKind space, Coefficient alpha);
  static Form DerivativePlusMass(SpaceKind space, Coefficient alpha, Coefficient beta);
};

FormKind DerivativeKind(SpaceKind space);

// Jacobians and determinants at the tensor Gauss-Legendre points of every element,
// computed by sum factorization from the geometry nodes.
struct GeometricFactors
{
  int dim = 2;
  int q = 0;          // points per axis
  int n_points = 0;   // per element
  int n_el = 0;
  std::vector<double> X;     // [(e * n_points + k) * dim + c]
  std::vector<double> J;     // [(e * n_points + k) * dim * dim + c * dim + b] = dX_c / dxi_b
  std::vector<double> detJ;  // [e * n_points + k]
  std::vector<double> weights;  // tensor weights [k]
};

GeometricFactors ComputeGeometricFactors(const MacroMesh &mesh, int q);

// Applies one term's reference-space operator. Basis function i of input component c
// contributes `sign * d/dxi_axis` (or its value if axis < 0) to output component `out`.
struct EvalEntry
{
  int in_comp;
  int out_comp;
  int sign;
  int axis;
};

std::vector<EvalEntry> EvalEntries(SpaceKind space, FormKind kind, int dim);
int EvalOutComponents(SpaceKind space, FormKind kind, int dim);

// Pointwise payload D of one form term: n_out x n_out symmetric matrix per quadrature point.
struct QuadTermData
{
  FormKind kind;
  int n_out = 1;
  std::vector<EvalEntry> evals;
  std::vector<double> data;  // [((e * n_points + k) * n_out + i) * n_out + j]
};

struct QuadData
{
  int n_points = 0;
  std::vector<QuadTermData> terms;
};

QuadData PaSetup(const FESpace &space, const Form &form, const GeometricFactors &geom,
                 int q);

// Matrix-free high-order operator y = P^T G^T B^T D B G P x. P is the identity, or the
// hanging-node constraint matrix when one is attached. Essential DOFs (true numbering) are
// handled by projection: their rows and columns act as the identity.
class PAOperator
{
public:
  PAOperator(const FESpace &space, const Form &form, int q,
             OpenBasis open = OpenBasis::Histopolation);

  void SetEssentialDofs(std::vector<int> ess);
  void SetConstraints(const ConstraintMatrix *c);

  int Height() const;
  void Mult(std::span<const double> x, std::span<double> y) const;
  Vector Mult(std::span<const double> x) const;

  // Exact diagonal; essential DOFs get 1. Not available with constraints attached.
  Vector Diagonal() const;

  // Multiply-add count of one application (element kernels only).
  long FlopsPerApply() const { return flops_; }

  const GeometricFactors &Geometry() const { return geom_; }
  const QuadData &Quad() const { return qdata_; }
  const Basis1D &Basis() const { return basis_; }
  const FESpace &Space() const { return space_; }
  const std::vector<int> &EssentialDofs() const { return ess_; }

private:
  void ElementKernel(int e, const double *xe, double *ye, double *work, long *flops) const;
  std::array<const DenseMatrix *, 3> Matrices(int comp, int axis) const;

  const FESpace &space_;
  Basis1D basis_;
  GeometricFactors geom_;
  QuadData qdata_;
  std::vector<int> ess_;
  const ConstraintMatrix *constraints_ = nullptr;
  std::vector<int> comp_offset_;
  std::vector<std::array<int, 3>> comp_shape_;
  int work_size_ = 0;
  long flops_ = 0;
  mutable Vector xl_, yl_, xe_, ye_, xt_;
};

// Dense per-element reference assembly by direct (non sum-factorized) basis evaluation and
// physical-space Piola maps; essential BCs are not applied. Refuses spaces with more than
// 50000 DOFs unless `allow_large` is set.
CsrMatrix AssembleOracle(const FESpace &space, const Form &form, int q,
                         OpenBasis open = OpenBasis::Histopolation, bool allow_large = false);

// Right-hand side vectors (L-vector layout) of the linear forms (f, v) for H1 and (f, v)
// with vector f for ND and RT.
Vector AssembleRhs(const FESpace &space, const ScalarFunction &f, int q);
Vector AssembleRhs(const FESpace &space, const VectorFunction &f, int q);

// Nodal interpolation of a scalar function into an H1 space (L-vector).
Vector InterpolateH1(const FESpace &space, const ScalarFunction &f);

// L2 norm of u_h - u for an H1 L-vector u_h.
double L2Error(const FESpace &space, std::span<const double> uh, const ScalarFunction &u,
               int q);

}  // namespace lor
