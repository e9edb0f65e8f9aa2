// SPDX-License-Identifier: Apache-2.0

#include "lor/lorasm.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <fmt/format.h>

namespace lor
{

int MacroBlockCSR::RowLength(int i) const
{
  int n = 0;
  while (n < nnz_per_row && J_hat[static_cast<std::size_t>(i) * nnz_per_row + n] >= 0)
  {
    n++;
  }
  return n;
}

int MacroBlockCSR::Find(int i, int j) const
{
  const int *row = &J_hat[static_cast<std::size_t>(i) * nnz_per_row];
  const int *end = row + RowLength(i);
  const int *it = std::lower_bound(row, end, j);
  return (it != end && *it == j) ? static_cast<int>(it - row) : -1;
}

namespace
{

std::array<int, 3> SubIndex(int s, int p, int dim)
{
  std::array<int, 3> mi{0, 0, 0};
  for (int a = 0; a < dim; a++)
  {
    mi[a] = s % p;
    s /= p;
  }
  return mi;
}

int NumLowOrderDofs(SpaceKind kind, int dim)
{
  switch (kind)
  {
    case SpaceKind::H1:
      return 1 << dim;
    case SpaceKind::ND:
      return dim * (1 << (dim - 1));
    default:
      return 2 * dim;
  }
}

inline double T(int bit, double x)
{
  return bit ? x : 1.0 - x;
}

inline double dT(int bit)
{
  return bit ? 1.0 : -1.0;
}

// Lowest-order reference functions on [0, 1]^d at point x: component-wise values and the
// partial derivatives of the single nonzero component.
struct LoRef
{
  int comp;
  double value;
  std::array<double, 3> grad;
};

LoRef EvalLowOrder(SpaceKind kind, int dim, int m, const double *x)
{
  LoRef r{0, 1.0, {1.0, 1.0, 1.0}};
  std::array<int, 3> bits{0, 0, 0};
  int axis = -1;
  switch (kind)
  {
    case SpaceKind::H1:
      for (int a = 0; a < dim; a++)
      {
        bits[a] = (m >> a) & 1;
      }
      break;
    case SpaceKind::ND:
    {
      axis = LocalEdgeAxis(dim, m);
      const int start = LocalEdgeCorners(dim, m)[0];
      for (int a = 0; a < dim; a++)
      {
        bits[a] = (start >> a) & 1;
      }
      r.comp = axis;
      break;
    }
    case SpaceKind::RT:
      axis = m / 2;
      bits[axis] = m % 2;
      r.comp = axis;
      break;
  }
  for (int a = 0; a < dim; a++)
  {
    // ND: constant along its own axis; RT: constant along the transverse axes.
    const bool active = (kind == SpaceKind::H1) || (kind == SpaceKind::ND && a != axis) ||
                        (kind == SpaceKind::RT && a == axis);
    const double t = active ? T(bits[a], x[a]) : 1.0;
    r.value *= t;
    for (int b = 0; b < dim; b++)
    {
      r.grad[b] *= (a == b) ? (active ? dT(bits[a]) : 0.0) : t;
    }
  }
  return r;
}

double Det(int d, const double *J)
{
  if (d == 2)
  {
    return J[0] * J[3] - J[1] * J[2];
  }
  return J[0] * (J[4] * J[8] - J[5] * J[7]) - J[1] * (J[3] * J[8] - J[5] * J[6]) +
         J[2] * (J[3] * J[7] - J[4] * J[6]);
}

void Invert(int d, const double *J, double det, double *Ji)
{
  if (d == 2)
  {
    Ji[0] = J[3] / det;
    Ji[1] = -J[1] / det;
    Ji[2] = -J[2] / det;
    Ji[3] = J[0] / det;
    return;
  }
  Ji[0] = (J[4] * J[8] - J[5] * J[7]) / det;
  Ji[1] = (J[2] * J[7] - J[1] * J[8]) / det;
  Ji[2] = (J[1] * J[5] - J[2] * J[4]) / det;
  Ji[3] = (J[5] * J[6] - J[3] * J[8]) / det;
  Ji[4] = (J[0] * J[8] - J[2] * J[6]) / det;
  Ji[5] = (J[2] * J[3] - J[0] * J[5]) / det;
  Ji[6] = (J[3] * J[7] - J[4] * J[6]) / det;
  Ji[7] = (J[1] * J[6] - J[0] * J[7]) / det;
  Ji[8] = (J[0] * J[4] - J[1] * J[3]) / det;
}

}  // namespace

std::vector<int> SubelementDofs(SpaceKind kind, int p, int dim, int s)
{
  const auto si = SubIndex(s, p, dim);
  const int n = NumLowOrderDofs(kind, dim);
  std::vector<int> out(n);
  for (int m = 0; m < n; m++)
  {
    std::array<int, 3> dbl{0, 0, 0};
    int comp = 0;
    switch (kind)
    {
      case SpaceKind::H1:
        for (int a = 0; a < dim; a++)
        {
          dbl[a] = 2 * (si[a] + ((m >> a) & 1));
        }
        break;
      case SpaceKind::ND:
      {
        comp = LocalEdgeAxis(dim, m);
        const int start = LocalEdgeCorners(dim, m)[0];
        for (int a = 0; a < dim; a++)
        {
          dbl[a] = (a == comp) ? 2 * si[a] + 1 : 2 * (si[a] + ((start >> a) & 1));
        }
        break;
      }
      case SpaceKind::RT:
        comp = m / 2;
        for (int a = 0; a < dim; a++)
        {
          dbl[a] = (a == comp) ? 2 * (si[a] + m % 2) : 2 * si[a] + 1;
        }
        break;
    }
    out[m] = LocalDofIndex(kind, dim, p, comp, dbl);
  }
  return out;
}

SharedSparsity BuildSharedSparsity(SpaceKind kind, int p, int dim)
{
  Require(p >= 1 && (dim == 2 || dim == 3), "BuildSharedSparsity: invalid degree or dimension");
  const int nd = static_cast<int>(LocalDofs(kind, dim, p).size());
  std::vector<std::set<int>> rows(nd);
  const int ns = IPow(p, dim);
  for (int s = 0; s < ns; s++)
  {
    const auto dofs = SubelementDofs(kind, p, dim, s);
    for (int i : dofs)
    {
      rows[i].insert(dofs.begin(), dofs.end());
    }
  }
  SharedSparsity sp;
  sp.ndof_per_el = nd;
  for (const auto &r : rows)
  {
    sp.nnz_per_row = std::max(sp.nnz_per_row, static_cast<int>(r.size()));
  }
  sp.J_hat.assign(static_cast<std::size_t>(nd) * sp.nnz_per_row, -1);
  for (int i = 0; i < nd; i++)
  {
    int k = 0;
    for (int j : rows[i])
    {
      sp.J_hat[static_cast<std::size_t>(i) * sp.nnz_per_row + k++] = j;
    }
  }
  return sp;
}

MacroBlockCSR AssembleMacroBlocks(const FESpace &space, const Form &form, const LorOptions &opts)
{
  Require(!form.terms.empty(), "AssembleMacroBlocks: empty form");
  for (const auto &t : form.terms)
  {
    Require(t.kind == FormKind::Mass || t.kind == DerivativeKind(space.kind),
            fmt::format("AssembleMacroBlocks: form '{}' is not defined on {} spaces",
                        FormKindName(t.kind), SpaceKindName(space.kind)));
  }
  const MacroMesh &mesh = *space.mesh;
  const int d = space.dim, p = space.p, nd = space.ndof_per_el;
  const SpaceKind kind = space.kind;
  const auto sp = BuildSharedSparsity(kind, p, d);
  MacroBlockCSR blk;
  blk.kind = kind;
  blk.dim = d;
  blk.p = p;
  blk.n_el = mesh.n_el;
  blk.ndof_per_el = nd;
  blk.nnz_per_row = sp.nnz_per_row;
  blk.J_hat = sp.J_hat;
  blk.A_hat.assign(static_cast<std::size_t>(mesh.n_el) * nd * sp.nnz_per_row, 0.0);

  // Subelements in 2^d parity color phases; subelements of one color share no DOFs.
  const int ns = IPow(p, d), nlo = NumLowOrderDofs(kind, d), nv = 1 << d;
  std::vector<int> order;
  for (int color = 0; color < (1 << d); color++)
  {
    for (int s = 0; s < ns; s++)
    {
      const auto si = SubIndex(s, p, d);
      int c = 0;
      for (int a = 0; a < d; a++)
      {
        c |= (si[a] & 1) << a;
      }
      if (c == color)
      {
        order.push_back(s);
      }
    }
  }
  std::vector<int> sub_dofs(static_cast<std::size_t>(ns) * nlo), slot(static_cast<std::size_t>(ns) * nlo * nlo);
  for (int s = 0; s < ns; s++)
  {
    const auto dofs = SubelementDofs(kind, p, d, s);
    for (int m = 0; m < nlo; m++)
    {
      sub_dofs[s * nlo + m] = dofs[m];
      for (int n = 0; n < nlo; n++)
      {
        slot[(static_cast<std::size_t>(s) * nlo + m) * nlo + n] = blk.Find(dofs[m], dofs[n]);
      }
    }
  }

  // Quadrature on [0, 1]^d.
  std::vector<std::array<double, 3>> qp;
  const double g0 = 0.5 - 0.5 / std::sqrt(3.0), g1 = 0.5 + 0.5 / std::sqrt(3.0);
  for (int k = 0; k < nv; k++)
  {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < d; a++)
    {
      const int bit = (k >> a) & 1;
      x[a] = (opts.quadrature == LorQuadrature::Vertex) ? bit : (bit ? g1 : g0);
    }
    qp.push_back(x);
  }
  const double qw = 1.0 / nv;

  // Reference tables at the quadrature points.
  std::vector<LoRef> lo(static_cast<std::size_t>(nv) * nlo), q1(static_cast<std::size_t>(nv) * nv);
  for (int k = 0; k < nv; k++)
  {
    for (int m = 0; m < nlo; m++)
    {
      lo[k * nlo + m] = EvalLowOrder(kind, d, m, qp[k].data());
    }
    for (int w = 0; w < nv; w++)
    {
      q1[k * nv + w] = EvalLowOrder(SpaceKind::H1, d, w, qp[k].data());
    }
  }

  const auto X = LatticeCoordinates(mesh, p);
  const int nlat = IPow(p + 1, d);
  const int nnz = sp.nnz_per_row;
  ParallelFor(mesh.n_el, [&](long e)
              {
                const int attr = mesh.attributes[e];
                std::vector<double> K(static_cast<std::size_t>(nlo) * nlo);
                std::vector<std::array<double, 3>> val(nlo), der(nlo);
                double *A = &blk.A_hat[static_cast<std::size_t>(e) * nd * nnz];
                for (int s : order)
                {
                  const auto si = SubIndex(s, p, d);
                  // Subelement vertex coordinates.
                  std::array<std::array<double, 3>, 8> V{};
                  for (int w = 0; w < nv; w++)
                  {
                    int li = 0, stride = 1;
                    for (int a = 0; a < d; a++)
                    {
                      li += (si[a] + ((w >> a) & 1)) * stride;
                      stride *= p + 1;
                    }
                    for (int c = 0; c < d; c++)
                    {
                      V[w][c] = X[(static_cast<std::size_t>(e) * nlat + li) * d + c];
                    }
                  }
                  std::fill(K.begin(), K.end(), 0.0);
                  for (int k = 0; k < nv; k++)
                  {
                    double J[9] = {0.0}, Ji[9];
                    Point x{0.0, 0.0, 0.0};
                    for (int w = 0; w < nv; w++)
                    {
                      const LoRef &f = q1[k * nv + w];
                      for (int c = 0; c < d; c++)
                      {
                        x[c] += f.value * V[w][c];
                        for (int b = 0; b < d; b++)
                        {
                          J[c * d + b] += f.grad[b] * V[w][c];
                        }
                      }
                    }
                    const double det = Det(d, J);
                    if (!(det > 0.0))
                    {
                      throw DegenerateGeometryError(fmt::format(
                          "non-positive Jacobian determinant {} in macro element {}, subelement {}",
                          det, e, s));
                    }
                    Invert(d, J, det, Ji);
                    for (int m = 0; m < nlo; m++)
                    {
                      const LoRef &f = lo[k * nlo + m];
                      std::array<double, 3> ref{0.0, 0.0, 0.0};
                      ref[f.comp] = f.value;
                      auto &v = val[m];
                      auto &g = der[m];
                      v = {0.0, 0.0, 0.0};
                      g = {0.0, 0.0, 0.0};
                      switch (kind)
                      {
                        case SpaceKind::H1:
                          v[0] = f.value;
                          for (int r = 0; r < d; r++)
                          {
                            for (int a = 0; a < d; a++)
                            {
                              g[r] += Ji[a * d + r] * f.grad[a];
                            }
                          }
                          break;
                        case SpaceKind::ND:
                          for (int r = 0; r < d; r++)
                          {
                            for (int a = 0; a < d; a++)
                            {
                              v[r] += Ji[a * d + r] * ref[a];
                            }
                          }
                          if (d == 2)
                          {
                            g[0] = ((f.comp == 1) ? f.grad[0] : -f.grad[1]) / det;
                          }
                          else
                          {
                            std::array<double, 3> cr{0.0, 0.0, 0.0};
                            const int i1 = (f.comp + 1) % 3, i2 = (f.comp + 2) % 3;
                            cr[i1] = f.grad[i2];
                            cr[i2] = -f.grad[i1];
                            for (int r = 0; r < 3; r++)
                            {
                              for (int a = 0; a < 3; a++)
                              {
                                g[r] += J[r * 3 + a] * cr[a] / det;
                              }
                            }
                          }
                          break;
                        case SpaceKind::RT:
                          for (int r = 0; r < d; r++)
                          {
                            for (int a = 0; a < d; a++)
                            {
                              v[r] += J[r * d + a] * ref[a] / det;
                            }
                          }
                          g[0] = f.grad[f.comp] / det;
                          break;
                      }
                    }
                    for (const auto &t : form.terms)
                    {
                      const double coeff = t.coeff(x, attr);
                      const double wk = coeff * qw * det;
                      const bool mass = t.kind == FormKind::Mass;
                      const int ncomp =
                          mass ? NumComponents(kind, d) : EvalOutComponents(kind, t.kind, d);
                      for (int m = 0; m < nlo; m++)
                      {
                        const auto &um = mass ? val[m] : der[m];
                        for (int n = m; n < nlo; n++)
                        {
                          const auto &un = mass ? val[n] : der[n];
                          double sum = 0.0;
                          for (int r = 0; r < ncomp; r++)
                          {
                            sum += um[r] * un[r];
                          }
                          K[static_cast<std::size_t>(m) * nlo + n] += wk * sum;
                        }
                      }
                    }
                  }
                  for (int m = 0; m < nlo; m++)
                  {
                    const int i = sub_dofs[s * nlo + m];
                    for (int n = 0; n < nlo; n++)
                    {
                      const double v = (m <= n) ? K[static_cast<std::size_t>(m) * nlo + n]
                                                : K[static_cast<std::size_t>(n) * nlo + m];
                      A[static_cast<std::size_t>(i) * nnz +
                        slot[(static_cast<std::size_t>(s) * nlo + m) * nlo + n]] += v;
                    }
                  }
                }
              });
  return blk;
}

CsrMatrix AssembleLocalCsr(const MacroBlockCSR &blk, const Restriction &r)
{
  Require(blk.ndof_per_el == r.ndof_per_el && blk.n_el == r.n_el,
          "AssembleLocalCsr: blocks and restriction do not match");
  const int nd = blk.ndof_per_el, nnz = blk.nnz_per_row, n = r.n_dofs;
  std::vector<int> row_len(nd);
  for (int i = 0; i < nd; i++)
  {
    row_len[i] = blk.RowLength(i);
  }

  // Calls `emit(col, value)` for each deduplicated entry of global row g in a fixed order.
  auto visit_row = [&](int g, auto &&emit)
  {
    const int gi0 = r.offsets[g], gi1 = r.offsets[g + 1];
    const int i_ne = gi1 - gi0;
    for (int t = gi0; t < gi1; t++)
    {
      const int slot_i = r.indices[t];
      const int e = slot_i / nd, i = slot_i % nd;
      const int si = r.signs[slot_i];
      for (int k = 0; k < row_len[i]; k++)
      {
        const int j = blk.J_hat[static_cast<std::size_t>(i) * nnz + k];
        const int slot_j = e * nd + j;
        const int gj = r.element_map[slot_j];
        const int sj = r.signs[slot_j];
        const int j_ne = r.Multiplicity(gj);
        if (i_ne == 1 || j_ne == 1)
        {
          emit(gj, si * sj * blk.A_hat[static_cast<std::size_t>(slot_i) * nnz + k]);
          continue;
        }
        // Lowest macro element containing both DOFs (slot lists are increasing in element).
        int min_e = -1;
        for (int a = gi0, b = r.offsets[gj]; a < gi1 && b < r.offsets[gj + 1];)
        {
          const int ea = r.indices[a] / nd, eb = r.indices[b] / nd;
          if (ea == eb)
          {
            min_e = ea;
            break;
          }
          (ea < eb) ? a++ : b++;
        }
        if (e != min_e)
        {
          continue;
        }
        double v = 0.0;
        for (int a = gi0, b = r.offsets[gj]; a < gi1 && b < r.offsets[gj + 1];)
        {
          const int sa = r.indices[a], sb = r.indices[b];
          const int ea = sa / nd, eb = sb / nd;
          if (ea == eb)
          {
            const int pos = blk.Find(sa % nd, sb % nd);
            if (pos >= 0)
            {
              v += r.signs[sa] * r.signs[sb] * blk.A_hat[static_cast<std::size_t>(sa) * nnz + pos];
            }
            a++;
            b++;
          }
          else
          {
            (ea < eb) ? a++ : b++;
          }
        }
        emit(gj, v);
      }
    }
  };

  CsrMatrix A;
  A.n_rows = A.n_cols = n;
  A.I.assign(n + 1, 0);
  ParallelFor(n, [&](long g)
              {
                int count = 0;
                visit_row(static_cast<int>(g), [&](int, double) { count++; });
                A.I[g + 1] = count;
              });
  for (int g = 0; g < n; g++)
  {
    A.I[g + 1] += A.I[g];
  }
  A.J.resize(A.I[n]);
  A.A.resize(A.I[n]);
  ParallelFor(n, [&](long g)
              {
                int pos = A.I[g];
                visit_row(static_cast<int>(g), [&](int col, double v)
                          {
                            A.J[pos] = col;
                            A.A[pos] = v;
                            pos++;
                          });
                std::vector<std::pair<int, double>> row(A.RowNnz(static_cast<int>(g)));
                for (std::size_t k = 0; k < row.size(); k++)
                {
                  row[k] = {A.J[A.I[g] + k], A.A[A.I[g] + k]};
                }
                std::sort(row.begin(), row.end(),
                          [](const auto &a, const auto &b) { return a.first < b.first; });
                for (std::size_t k = 0; k < row.size(); k++)
                {
                  A.J[A.I[g] + k] = row[k].first;
                  A.A[A.I[g] + k] = row[k].second;
                }
              });
  return A;
}

CsrMatrix AssembleLor(const FESpace &space, const Form &form, const LorOptions &opts)
{
  return AssembleLocalCsr(AssembleMacroBlocks(space, form, opts), space.restriction);
}

CsrMatrix AssembleWithConstraints(const CsrMatrix &A, const ConstraintMatrix &c)
{
  Require(A.n_rows == A.n_cols && A.n_rows == c.Lambda.n_rows,
          "AssembleWithConstraints: dimension mismatch");
  return Rap(c.Lambda, A, true);
}

CsrMatrix EliminateEssentialBcs(const CsrMatrix &A, std::span<const int> ess,
                                EliminationData &data)
{
  Require(A.n_rows == A.n_cols, "EliminateEssentialBcs: matrix must be square");
  const int n = A.n_rows;
  std::vector<char> is_ess(n, 0);
  for (std::size_t k = 0; k < ess.size(); k++)
  {
    Require(ess[k] >= 0 && ess[k] < n, "EliminateEssentialBcs: index out of range");
    Require(k == 0 || ess[k] > ess[k - 1], "EliminateEssentialBcs: indices must be sorted unique");
    is_ess[ess[k]] = 1;
  }
  data.ess.assign(ess.begin(), ess.end());
  CsrMatrix B, &Ae = data.Ae;
  B.n_rows = B.n_cols = n;
  Ae.n_rows = Ae.n_cols = n;
  B.I.assign(n + 1, 0);
  Ae.I.assign(n + 1, 0);
  for (int i = 0; i < n; i++)
  {
    if (is_ess[i])
    {
      B.J.push_back(i);
      B.A.push_back(1.0);
    }
    else
    {
      for (int k = A.I[i]; k < A.I[i + 1]; k++)
      {
        const int j = A.J[k];
        if (is_ess[j])
        {
          Ae.J.push_back(j);
          Ae.A.push_back(A.A[k]);
        }
        else
        {
          B.J.push_back(j);
          B.A.push_back(A.A[k]);
        }
      }
    }
    B.I[i + 1] = static_cast<int>(B.J.size());
    Ae.I[i + 1] = static_cast<int>(Ae.J.size());
  }
  if (ess.empty())
  {
    data.Ae = CsrMatrix{};
    return A;
  }
  return B;
}

void EliminateRhs(const EliminationData &data, std::span<const double> g, std::span<double> b)
{
  if (data.Empty())
  {
    return;
  }
  Require(static_cast<int>(g.size()) == data.Ae.n_cols &&
              static_cast<int>(b.size()) == data.Ae.n_rows,
          "EliminateRhs: size mismatch");
  for (int i = 0; i < data.Ae.n_rows; i++)
  {
    for (int k = data.Ae.I[i]; k < data.Ae.I[i + 1]; k++)
    {
      b[i] -= data.Ae.A[k] * g[data.Ae.J[k]];
    }
  }
  for (int j : data.ess)
  {
    b[j] = g[j];
  }
}

}  // namespace lor
