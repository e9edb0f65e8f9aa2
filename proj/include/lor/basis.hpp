// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>
#include "lor/common.hpp"

namespace lor
{

// Small dense row-major matrix used for the 1D basis tables.
struct DenseMatrix
{
  int rows = 0, cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(int m, int n) : rows(m), cols(n), data(static_cast<std::size_t>(m) * n, 0.0) {}
  double &operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
};

struct QuadratureRule1D
{
  std::vector<double> points;
  std::vector<double> weights;
};

// Nodes and weights on [-1, 1].
QuadratureRule1D GaussLobatto(int p);
QuadratureRule1D GaussLegendre(int q);

// Legendre polynomial L_n and its derivative at x.
void Legendre(int n, double x, double &value, double &derivative);

// B(i, j) = l_j(xi_i), D(i, j) = l_j'(xi_i), with l_j the Lagrange polynomials on the
// given nodes. Computed from barycentric weights.
void LagrangeMatrices(std::span<const double> nodes, std::span<const double> eval_pts,
                      DenseMatrix &B, DenseMatrix &D);

// Histopolation basis on the degree-p Gauss-Lobatto partition of [-1, 1]:
// h_j = -sum_{k<=j} l_k', j = 0..p-1, so that the integral of h_j over the subinterval
// [x_i, x_{i+1}] is delta_ij.
struct Histopolation1D
{
  int p = 0;
  std::vector<double> nodes;  // subinterval boundaries (Gauss-Lobatto nodes)
  DenseMatrix H;              // H(i, j) = h_j(xi_i), q x p
};

Histopolation1D HistopolationMatrix(int p, std::span<const double> eval_pts);

// Choice of the 1D "open" basis used along the tangential (ND) or normal-transverse (RT)
// directions of vector elements.
enum class OpenBasis
{
  Histopolation,  // interpolation-histopolation basis (spectrally equivalent to LOR)
  Nodal           // Lagrange at the p Gauss-Legendre points (negative control)
};

// One-dimensional basis tables of a degree-p element evaluated at q Gauss-Legendre points.
struct Basis1D
{
  int p = 0;
  std::vector<double> nodes;       // p+1 Gauss-Lobatto nodes
  std::vector<double> gl_weights;  // Gauss-Lobatto weights
  QuadratureRule1D quad;           // evaluation rule
  DenseMatrix B;                   // closed values, q x (p+1)
  DenseMatrix D;                   // closed derivatives, q x (p+1)
  DenseMatrix Bo;                  // open values, q x p
  OpenBasis open = OpenBasis::Histopolation;

  int Q() const { return static_cast<int>(quad.points.size()); }
};

Basis1D MakeBasis1D(int p, int q, OpenBasis open = OpenBasis::Histopolation);

// Sum-factorized contraction of a d-dimensional tensor with one matrix per axis:
// out = (M_{d-1} x ... x M_0) in, lexicographic layout with axis 0 fastest. With
// `transpose`, each M_a is applied as M_a^T. `in_shape` is the shape of `in`. The two work
// buffers must hold the largest intermediate tensor. Adds the multiply-add count to *flops
// when it is non-null.
void TensorContract(int dim, const std::array<const DenseMatrix *, 3> &M, bool transpose,
                    const double *in, std::array<int, 3> in_shape, double *out, double *work1,
                    double *work2, long *flops = nullptr);

}  // namespace lor
