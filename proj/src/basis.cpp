// SPDX-License-Identifier: Apache-2.0

#include "lor/basis.hpp"

#include <cmath>
#include <numbers>

namespace lor
{

void Legendre(int n, double x, double &value, double &derivative)
{
  double p0 = 1.0, p1 = x;
  if (n == 0)
  {
    value = 1.0;
    derivative = 0.0;
    return;
  }
  double d0 = 0.0, d1 = 1.0;
  for (int k = 2; k <= n; k++)
  {
    const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
    const double d2 = d0 + (2 * k - 1) * p1;
    p0 = p1;
    p1 = p2;
    d0 = d1;
    d1 = d2;
  }
  value = p1;
  derivative = d1;
}

QuadratureRule1D GaussLobatto(int p)
{
  Require(p >= 1, "GaussLobatto: degree must be at least 1");
  QuadratureRule1D rule;
  const int n = p + 1;
  rule.points.resize(n);
  rule.weights.resize(n);
  rule.points[0] = -1.0;
  rule.points[p] = 1.0;
  // Interior nodes are the roots of L_p'. Newton on L_p' from Chebyshev-Gauss-Lobatto
  // guesses; only the lower half is computed and mirrored to keep the set symmetric.
  for (int k = 1; k <= p / 2; k++)
  {
    double x = -std::cos(std::numbers::pi * k / p);
    for (int it = 0; it < 100; it++)
    {
      // (1 - x^2) L_p'' = 2 x L_p' - p (p + 1) L_p
      double L, dL;
      Legendre(p, x, L, dL);
      const double d2L = (2.0 * x * dL - p * (p + 1.0) * L) / (1.0 - x * x);
      const double dx = dL / d2L;
      x -= dx;
      if (std::abs(dx) < 1e-15)
      {
        break;
      }
    }
    rule.points[k] = x;
    rule.points[p - k] = -x;
  }
  if (p % 2 == 0)
  {
    rule.points[p / 2] = 0.0;
  }
  for (int k = 0; k < n; k++)
  {
    double L, dL;
    Legendre(p, rule.points[k], L, dL);
    rule.weights[k] = 2.0 / (p * (p + 1.0) * L * L);
  }
  for (int k = 0; k < n / 2; k++)
  {
    const double w = 0.5 * (rule.weights[k] + rule.weights[p - k]);
    rule.weights[k] = rule.weights[p - k] = w;
  }
  return rule;
}

QuadratureRule1D GaussLegendre(int q)
{
  Require(q >= 1, "GaussLegendre: number of points must be at least 1");
  QuadratureRule1D rule;
  rule.points.resize(q);
  rule.weights.resize(q);
  for (int k = 0; k < (q + 1) / 2; k++)
  {
    double x = -std::cos(std::numbers::pi * (k + 0.75) / (q + 0.5));
    double L = 0.0, dL = 1.0;
    for (int it = 0; it < 100; it++)
    {
      Legendre(q, x, L, dL);
      const double dx = L / dL;
      x -= dx;
      if (std::abs(dx) < 1e-16)
      {
        break;
      }
    }
    Legendre(q, x, L, dL);
    const double w = 2.0 / ((1.0 - x * x) * dL * dL);
    rule.points[k] = x;
    rule.points[q - 1 - k] = -x;
    rule.weights[k] = rule.weights[q - 1 - k] = w;
  }
  if (q % 2 == 1)
  {
    rule.points[q / 2] = 0.0;
  }
  return rule;
}

void LagrangeMatrices(std::span<const double> nodes, std::span<const double> eval_pts,
                      DenseMatrix &B, DenseMatrix &D)
{
  const int n = static_cast<int>(nodes.size());
  const int q = static_cast<int>(eval_pts.size());
  Require(n >= 1, "LagrangeMatrices: empty node set");
  std::vector<double> w(n, 1.0);
  for (int j = 0; j < n; j++)
  {
    for (int k = 0; k < n; k++)
    {
      if (k != j)
      {
        const double diff = nodes[j] - nodes[k];
        Require(diff != 0.0, "LagrangeMatrices: duplicate nodes");
        w[j] /= diff;
      }
    }
  }
  B = DenseMatrix(q, n);
  D = DenseMatrix(q, n);
  for (int i = 0; i < q; i++)
  {
    const double x = eval_pts[i];
    int hit = -1;
    for (int k = 0; k < n; k++)
    {
      if (x == nodes[k])
      {
        hit = k;
      }
    }
    for (int j = 0; j < n; j++)
    {
      // l_j(x) = w_j prod_{m != j} (x - x_m), l_j'(x) = w_j sum_{k != j} prod_{m != j,k}
      double value = w[j], deriv = 0.0;
      for (int m = 0; m < n; m++)
      {
        if (m != j)
        {
          value *= (x - nodes[m]);
        }
      }
      for (int k = 0; k < n; k++)
      {
        if (k == j)
        {
          continue;
        }
        double prod = w[j];
        for (int m = 0; m < n; m++)
        {
          if (m != j && m != k)
          {
            prod *= (x - nodes[m]);
          }
        }
        deriv += prod;
      }
      B(i, j) = (hit >= 0) ? (hit == j ? 1.0 : 0.0) : value;
      D(i, j) = deriv;
    }
  }
}

Histopolation1D HistopolationMatrix(int p, std::span<const double> eval_pts)
{
  Require(p >= 1, "HistopolationMatrix: degree must be at least 1");
  Histopolation1D h;
  h.p = p;
  h.nodes = GaussLobatto(p).points;
  DenseMatrix B, D;
  LagrangeMatrices(h.nodes, eval_pts, B, D);
  const int q = static_cast<int>(eval_pts.size());
  h.H = DenseMatrix(q, p);
  for (int i = 0; i < q; i++)
  {
    double partial = 0.0;
    for (int j = 0; j < p; j++)
    {
      partial -= D(i, j);
      h.H(i, j) = partial;
    }
  }
  return h;
}

Basis1D MakeBasis1D(int p, int q, OpenBasis open)
{
  Require(p >= 1 && q >= 1, "MakeBasis1D: invalid degree or quadrature size");
  Basis1D b;
  b.p = p;
  b.open = open;
  auto gll = GaussLobatto(p);
  b.nodes = gll.points;
  b.gl_weights = gll.weights;
  b.quad = GaussLegendre(q);
  LagrangeMatrices(b.nodes, b.quad.points, b.B, b.D);
  if (open == OpenBasis::Histopolation)
  {
    b.Bo = HistopolationMatrix(p, b.quad.points).H;
  }
  else
  {
    DenseMatrix unused;
    LagrangeMatrices(GaussLegendre(p).points, b.quad.points, b.Bo, unused);
  }
  return b;
}

void TensorContract(int dim, const std::array<const DenseMatrix *, 3> &M, bool transpose,
                    const double *in, std::array<int, 3> in_shape, double *out, double *work1,
                    double *work2, long *flops)
{
  std::array<int, 3> s{1, 1, 1};
  for (int a = 0; a < dim; a++)
  {
    s[a] = in_shape[a];
  }
  const double *src = in;
  for (int a = 0; a < dim; a++)
  {
    const DenseMatrix &A = *M[a];
    const int old_len = s[a];
    const int new_len = transpose ? A.cols : A.rows;
    Require(old_len == (transpose ? A.rows : A.cols), "TensorContract: shape mismatch");
    int inner = 1, outer = 1;
    for (int b = 0; b < a; b++)
    {
      inner *= s[b];
    }
    for (int b = a + 1; b < dim; b++)
    {
      outer *= s[b];
    }
    double *dst = (a == dim - 1) ? out : ((a % 2 == 0) ? work1 : work2);
    for (int o = 0; o < outer; o++)
    {
      for (int r = 0; r < new_len; r++)
      {
        double *d = dst + (static_cast<std::size_t>(o) * new_len + r) * inner;
        for (int i = 0; i < inner; i++)
        {
          d[i] = 0.0;
        }
        for (int k = 0; k < old_len; k++)
        {
          const double m = transpose ? A(k, r) : A(r, k);
          const double *sp = src + (static_cast<std::size_t>(o) * old_len + k) * inner;
          for (int i = 0; i < inner; i++)
          {
            d[i] += m * sp[i];
          }
        }
      }
    }
    if (flops)
    {
      *flops += 2L * outer * new_len * old_len * inner;
    }
    s[a] = new_len;
    src = dst;
  }
}

}  // namespace lor
