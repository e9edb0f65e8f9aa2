// SPDX-License-Identifier: Apache-2.0

#include "lor/pa.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace lor
{

const char *FormKindName(FormKind kind)
{
  switch (kind)
  {
    case FormKind::Mass:
      return "mass";
    case FormKind::Diffusion:
      return "diffusion";
    case FormKind::CurlCurl:
      return "curlcurl";
    default:
      return "divdiv";
  }
}

FormKind DerivativeKind(SpaceKind space)
{
  switch (space)
  {
    case SpaceKind::H1:
      return FormKind::Diffusion;
    case SpaceKind::ND:
      return FormKind::CurlCurl;
    default:
      return FormKind::DivDiv;
  }
}

Form Form::Mass(Coefficient beta)
{
  return {{{FormKind::Mass, std::move(beta)}}};
}

Form Form::Derivative(SpaceKind space, Coefficient alpha)
{
  return {{{DerivativeKind(space), std::move(alpha)}}};
}

Form Form::DerivativePlusMass(SpaceKind space, Coefficient alpha, Coefficient beta)
{
  return {{{DerivativeKind(space), std::move(alpha)}, {FormKind::Mass, std::move(beta)}}};
}

namespace
{

double Det(int d, const double *J)
{
  if (d == 2)
  {
    return J[0] * J[3] - J[1] * J[2];
  }
  return J[0] * (J[4] * J[8] - J[5] * J[7]) - J[1] * (J[3] * J[8] - J[5] * J[6]) +
         J[2] * (J[3] * J[7] - J[4] * J[6]);
}

// Inverse of a d x d row-major matrix by the adjugate.
void Invert(int d, const double *J, double *Ji)
{
  const double det = Det(d, J);
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

void CheckFormSpace(SpaceKind space, FormKind kind)
{
  const bool ok = kind == FormKind::Mass || kind == DerivativeKind(space);
  Require(ok, fmt::format("form '{}' is not defined on {} spaces", FormKindName(kind),
                          SpaceKindName(space)));
}

std::array<int, 3> LocalMultiIndex(SpaceKind kind, const LocalDof &d, int dim)
{
  std::array<int, 3> mi{0, 0, 0};
  for (int a = 0; a < dim; a++)
  {
    mi[a] = ClosedAlong(kind, d.comp, a) ? d.dbl[a] / 2 : (d.dbl[a] - 1) / 2;
  }
  return mi;
}

}  // namespace

std::vector<EvalEntry> EvalEntries(SpaceKind space, FormKind kind, int dim)
{
  CheckFormSpace(space, kind);
  std::vector<EvalEntry> ev;
  if (kind == FormKind::Mass)
  {
    for (int c = 0; c < NumComponents(space, dim); c++)
    {
      ev.push_back({c, c, 1, -1});
    }
    return ev;
  }
  switch (kind)
  {
    case FormKind::Diffusion:
      for (int b = 0; b < dim; b++)
      {
        ev.push_back({0, b, 1, b});
      }
      break;
    case FormKind::CurlCurl:
      if (dim == 2)
      {
        ev.push_back({1, 0, 1, 0});
        ev.push_back({0, 0, -1, 1});
      }
      else
      {
        for (int k = 0; k < 3; k++)
        {
          const int i = (k + 1) % 3, j = (k + 2) % 3;
          // (curl u)_k = d_i u_j - d_j u_i
          ev.push_back({j, k, 1, i});
          ev.push_back({i, k, -1, j});
        }
      }
      break;
    default:
      for (int c = 0; c < dim; c++)
      {
        ev.push_back({c, 0, 1, c});
      }
      break;
  }
  return ev;
}

int EvalOutComponents(SpaceKind space, FormKind kind, int dim)
{
  CheckFormSpace(space, kind);
  switch (kind)
  {
    case FormKind::Mass:
      return NumComponents(space, dim);
    case FormKind::Diffusion:
      return dim;
    case FormKind::CurlCurl:
      return dim == 2 ? 1 : 3;
    default:
      return 1;
  }
}

GeometricFactors ComputeGeometricFactors(const MacroMesh &mesh, int q)
{
  Require(q >= 1, "ComputeGeometricFactors: q must be at least 1");
  const int d = mesh.dim, ng = mesh.geom_degree + 1, nn = mesh.NodesPerElement();
  GeometricFactors g;
  g.dim = d;
  g.q = q;
  g.n_points = IPow(q, d);
  g.n_el = mesh.n_el;
  const auto rule = GaussLegendre(q);
  DenseMatrix B, D;
  LagrangeMatrices(GaussLobatto(mesh.geom_degree).points, rule.points, B, D);
  g.weights.resize(g.n_points);
  for (int k = 0; k < g.n_points; k++)
  {
    double w = 1.0;
    int r = k;
    for (int a = 0; a < d; a++)
    {
      w *= rule.weights[r % q];
      r /= q;
    }
    g.weights[k] = w;
  }
  const std::size_t np = static_cast<std::size_t>(mesh.n_el) * g.n_points;
  g.X.resize(np * d);
  g.J.resize(np * d * d);
  g.detJ.resize(np);
  const int wsize = IPow(std::max(ng, q), d);
  ParallelFor(mesh.n_el, [&](long e)
              {
                std::vector<double> xin(nn), xout(g.n_points), w1(wsize), w2(wsize);
                const auto X = mesh.ElementNodes(static_cast<int>(e));
                const std::size_t base = static_cast<std::size_t>(e) * g.n_points;
                for (int c = 0; c < d; c++)
                {
                  for (int k = 0; k < nn; k++)
                  {
                    xin[k] = X[k * d + c];
                  }
                  TensorContract(d, {&B, &B, &B}, false, xin.data(), {ng, ng, ng}, xout.data(),
                                 w1.data(), w2.data());
                  for (int k = 0; k < g.n_points; k++)
                  {
                    g.X[(base + k) * d + c] = xout[k];
                  }
                  for (int b = 0; b < d; b++)
                  {
                    std::array<const DenseMatrix *, 3> M{&B, &B, &B};
                    M[b] = &D;
                    TensorContract(d, M, false, xin.data(), {ng, ng, ng}, xout.data(),
                                   w1.data(), w2.data());
                    for (int k = 0; k < g.n_points; k++)
                    {
                      g.J[(base + k) * d * d + c * d + b] = xout[k];
                    }
                  }
                }
                for (int k = 0; k < g.n_points; k++)
                {
                  g.detJ[base + k] = Det(d, &g.J[(base + k) * d * d]);
                }
              });
  for (long e = 0; e < mesh.n_el; e++)
  {
    for (int k = 0; k < g.n_points; k++)
    {
      if (!(g.detJ[e * g.n_points + k] > 0.0))
      {
        throw DegenerateGeometryError(fmt::format(
            "non-positive Jacobian determinant {} in element {} at quadrature point {}",
            g.detJ[e * g.n_points + k], e, k));
      }
    }
  }
  return g;
}

QuadData PaSetup(const FESpace &space, const Form &form, const GeometricFactors &geom, int q)
{
  Require(geom.q == q, "PaSetup: geometric factors computed for a different rule");
  Require(!form.terms.empty(), "PaSetup: empty form");
  const int d = space.dim, np = geom.n_points;
  const MacroMesh &mesh = *space.mesh;
  QuadData qd;
  qd.n_points = np;
  for (const auto &term : form.terms)
  {
    QuadTermData t;
    t.kind = term.kind;
    t.evals = EvalEntries(space.kind, term.kind, d);
    t.n_out = EvalOutComponents(space.kind, term.kind, d);
    const int no = t.n_out;
    t.data.assign(static_cast<std::size_t>(mesh.n_el) * np * no * no, 0.0);
    ParallelFor(mesh.n_el, [&](long e)
                {
                  const int attr = mesh.attributes[e];
                  for (int k = 0; k < np; k++)
                  {
                    const std::size_t pt = static_cast<std::size_t>(e) * np + k;
                    const double *J = &geom.J[pt * d * d];
                    const double det = geom.detJ[pt];
                    const double w = geom.weights[k];
                    Point x{0.0, 0.0, 0.0};
                    for (int c = 0; c < d; c++)
                    {
                      x[c] = geom.X[pt * d + c];
                    }
                    const double coeff = term.coeff(x, attr);
                    double *P = &t.data[pt * no * no];
                    double Ji[9];
                    Invert(d, J, Ji);
                    auto jinv_jinvt = [&](double s)
                    {
                      for (int b = 0; b < d; b++)
                      {
                        for (int c = 0; c < d; c++)
                        {
                          double v = 0.0;
                          for (int m = 0; m < d; m++)
                          {
                            v += Ji[b * d + m] * Ji[c * d + m];
                          }
                          P[b * d + c] = s * v;
                        }
                      }
                    };
                    auto jt_j = [&](double s)
                    {
                      for (int b = 0; b < d; b++)
                      {
                        for (int c = 0; c < d; c++)
                        {
                          double v = 0.0;
                          for (int m = 0; m < d; m++)
                          {
                            v += J[m * d + b] * J[m * d + c];
                          }
                          P[b * d + c] = s * v;
                        }
                      }
                    };
                    switch (space.kind)
                    {
                      case SpaceKind::H1:
                        if (term.kind == FormKind::Mass)
                        {
                          P[0] = w * det * coeff;
                        }
                        else
                        {
                          jinv_jinvt(w * det * coeff);
                        }
                        break;
                      case SpaceKind::ND:
                        if (term.kind == FormKind::Mass)
                        {
                          jinv_jinvt(w * det * coeff);
                        }
                        else if (d == 2)
                        {
                          P[0] = w * coeff / det;
                        }
                        else
                        {
                          jt_j(w * coeff / det);
                        }
                        break;
                      case SpaceKind::RT:
                        if (term.kind == FormKind::Mass)
                        {
                          jt_j(w * coeff / det);
                        }
                        else
                        {
                          P[0] = w * coeff / det;
                        }
                        break;
                    }
                  }
                });
    qd.terms.push_back(std::move(t));
  }
  return qd;
}

PAOperator::PAOperator(const FESpace &space, const Form &form, int q, OpenBasis open)
  : space_(space), basis_(MakeBasis1D(space.p, q, open)),
    geom_(ComputeGeometricFactors(*space.mesh, q)), qdata_(PaSetup(space, form, geom_, q))
{
  const int d = space.dim, nc = NumComponents(space.kind, d);
  int off = 0;
  for (int c = 0; c < nc; c++)
  {
    comp_offset_.push_back(off);
    comp_shape_.push_back(ComponentShape(space.kind, d, space.p, c));
    off += comp_shape_.back()[0] * comp_shape_.back()[1] * comp_shape_.back()[2];
  }
  comp_offset_.push_back(off);
  work_size_ = IPow(std::max(q, space.p + 1), d);
  xl_.resize(space.n_dofs);
  yl_.resize(space.n_dofs);
  xe_.resize(static_cast<std::size_t>(space.mesh->n_el) * space.ndof_per_el);
  ye_.resize(xe_.size());

  std::vector<double> zx(space.ndof_per_el, 0.0), zy(space.ndof_per_el);
  std::vector<double> work(9 * static_cast<std::size_t>(work_size_));
  long f = 0;
  ElementKernel(0, zx.data(), zy.data(), work.data(), &f);
  flops_ = f * space.mesh->n_el;
}

void PAOperator::SetEssentialDofs(std::vector<int> ess)
{
  std::sort(ess.begin(), ess.end());
  ess.erase(std::unique(ess.begin(), ess.end()), ess.end());
  for (int g : ess)
  {
    Require(g >= 0 && g < Height(), "SetEssentialDofs: index out of range");
  }
  ess_ = std::move(ess);
}

void PAOperator::SetConstraints(const ConstraintMatrix *c)
{
  if (c)
  {
    Require(c->Lambda.n_rows == space_.n_dofs, "SetConstraints: constraint shape mismatch");
  }
  constraints_ = c;
  Require(ess_.empty(), "SetConstraints: attach constraints before essential DOFs");
}

int PAOperator::Height() const
{
  return constraints_ ? constraints_->NumTrue() : space_.n_dofs;
}

std::array<const DenseMatrix *, 3> PAOperator::Matrices(int comp, int axis) const
{
  std::array<const DenseMatrix *, 3> M{&basis_.B, &basis_.B, &basis_.B};
  for (int a = 0; a < space_.dim; a++)
  {
    const bool closed = ClosedAlong(space_.kind, comp, a);
    if (a == axis)
    {
      Require(closed, "derivative along an open direction");
      M[a] = &basis_.D;
    }
    else
    {
      M[a] = closed ? &basis_.B : &basis_.Bo;
    }
  }
  return M;
}

void PAOperator::ElementKernel(int e, const double *xe, double *ye, double *work,
                               long *flops) const
{
  const int d = space_.dim, np = qdata_.n_points, W = work_size_;
  double *Q = work, *Z = work + 3 * W, *tmp = work + 6 * W, *w1 = work + 7 * W,
         *w2 = work + 8 * W;
  std::fill(ye, ye + space_.ndof_per_el, 0.0);
  for (const auto &t : qdata_.terms)
  {
    const int no = t.n_out;
    std::fill(Q, Q + no * np, 0.0);
    for (const auto &ev : t.evals)
    {
      TensorContract(d, Matrices(ev.in_comp, ev.axis), false, xe + comp_offset_[ev.in_comp],
                     comp_shape_[ev.in_comp], tmp, w1, w2, flops);
      double *Qk = Q + ev.out_comp * np;
      for (int k = 0; k < np; k++)
      {
        Qk[k] += ev.sign * tmp[k];
      }
    }
    const double *P = &t.data[static_cast<std::size_t>(e) * np * no * no];
    for (int k = 0; k < np; k++)
    {
      const double *Pk = P + k * no * no;
      for (int i = 0; i < no; i++)
      {
        double s = 0.0;
        for (int j = 0; j < no; j++)
        {
          s += Pk[i * no + j] * Q[j * np + k];
        }
        Z[i * np + k] = s;
      }
    }
    if (flops)
    {
      *flops += 2L * np * no * no;
    }
    for (const auto &ev : t.evals)
    {
      const std::array<int, 3> qs{basis_.Q(), basis_.Q(), basis_.Q()};
      TensorContract(d, Matrices(ev.in_comp, ev.axis), true, Z + ev.out_comp * np, qs, tmp, w1,
                     w2, flops);
      double *yc = ye + comp_offset_[ev.in_comp];
      const int n = comp_offset_[ev.in_comp + 1] - comp_offset_[ev.in_comp];
      for (int k = 0; k < n; k++)
      {
        yc[k] += ev.sign * tmp[k];
      }
    }
  }
}

void PAOperator::Mult(std::span<const double> x, std::span<double> y) const
{
  Require(static_cast<int>(x.size()) == Height() && static_cast<int>(y.size()) == Height(),
          "PAOperator::Mult: shape mismatch");
  std::span<const double> xin = x;
  if (!ess_.empty())
  {
    xt_.assign(x.begin(), x.end());
    for (int g : ess_)
    {
      xt_[g] = 0.0;
    }
    xin = xt_;
  }
  if (constraints_)
  {
    Spmv(constraints_->Lambda, xin, xl_);
  }
  else
  {
    std::copy(xin.begin(), xin.end(), xl_.begin());
  }
  const Restriction &r = space_.restriction;
  RestrictionApply(r, xl_, xe_);
  const int nd = space_.ndof_per_el;
  ParallelFor(space_.mesh->n_el, [&](long e)
              {
                thread_local std::vector<double> work;
                work.resize(9 * static_cast<std::size_t>(work_size_));
                ElementKernel(static_cast<int>(e), &xe_[e * nd], &ye_[e * nd], work.data(),
                              nullptr);
              });
  RestrictionApplyTranspose(r, ye_, yl_);
  if (constraints_)
  {
    SpmvTranspose(constraints_->Lambda, yl_, y);
  }
  else
  {
    std::copy(yl_.begin(), yl_.end(), y.begin());
  }
  for (int g : ess_)
  {
    y[g] = x[g];
  }
}

Vector PAOperator::Mult(std::span<const double> x) const
{
  Vector y(Height());
  Mult(x, y);
  return y;
}

Vector PAOperator::Diagonal() const
{
  if (constraints_)
  {
    throw NotImplementedError("PAOperator::Diagonal: not available with hanging-node constraints");
  }
  const int d = space_.dim, np = qdata_.n_points, nd = space_.ndof_per_el;
  const int nq = basis_.Q();
  std::vector<double> de(static_cast<std::size_t>(space_.mesh->n_el) * nd, 0.0);
  // Pairwise Hadamard products of the 1D tables for every pair of evaluation entries that
  // act on the same input component.
  struct PairTables
  {
    int term, e1, e2;
    std::array<DenseMatrix, 3> H;
  };
  std::vector<PairTables> pairs;
  for (int t = 0; t < static_cast<int>(qdata_.terms.size()); t++)
  {
    const auto &ev = qdata_.terms[t].evals;
    for (int i = 0; i < static_cast<int>(ev.size()); i++)
    {
      for (int j = 0; j < static_cast<int>(ev.size()); j++)
      {
        if (ev[i].in_comp != ev[j].in_comp)
        {
          continue;
        }
        PairTables pt{t, i, j, {}};
        const auto Mi = Matrices(ev[i].in_comp, ev[i].axis);
        const auto Mj = Matrices(ev[j].in_comp, ev[j].axis);
        for (int a = 0; a < 3; a++)
        {
          pt.H[a] = DenseMatrix(Mi[a]->rows, Mi[a]->cols);
          for (std::size_t k = 0; k < pt.H[a].data.size(); k++)
          {
            pt.H[a].data[k] = Mi[a]->data[k] * Mj[a]->data[k];
          }
        }
        pairs.push_back(std::move(pt));
      }
    }
  }
  ParallelFor(space_.mesh->n_el, [&](long e)
              {
                std::vector<double> field(np), tmp(work_size_), w1(work_size_), w2(work_size_);
                for (const auto &pt : pairs)
                {
                  const auto &t = qdata_.terms[pt.term];
                  const auto &a = t.evals[pt.e1], &b = t.evals[pt.e2];
                  const int no = t.n_out;
                  const double *P = &t.data[static_cast<std::size_t>(e) * np * no * no];
                  for (int k = 0; k < np; k++)
                  {
                    field[k] = a.sign * b.sign * P[k * no * no + a.out_comp * no + b.out_comp];
                  }
                  TensorContract(d, {&pt.H[0], &pt.H[1], &pt.H[2]}, true, field.data(),
                                 {nq, nq, nq}, tmp.data(), w1.data(), w2.data());
                  const int off = comp_offset_[a.in_comp];
                  const int n = comp_offset_[a.in_comp + 1] - off;
                  for (int k = 0; k < n; k++)
                  {
                    de[e * nd + off + k] += tmp[k];
                  }
                }
              });
  const Restriction &r = space_.restriction;
  Vector diag(space_.n_dofs, 0.0);
  for (int g = 0; g < space_.n_dofs; g++)
  {
    for (int t = r.offsets[g]; t < r.offsets[g + 1]; t++)
    {
      diag[g] += de[r.indices[t]];
    }
  }
  for (int g : ess_)
  {
    diag[g] = 1.0;
  }
  return diag;
}

CsrMatrix AssembleOracle(const FESpace &space, const Form &form, int q, OpenBasis open,
                         bool allow_large)
{
  if (space.n_dofs > 50000 && !allow_large)
  {
    throw std::invalid_argument(fmt::format(
        "AssembleOracle: {} DOFs exceeds the 50000 DOF guard (pass allow_large to override)",
        space.n_dofs));
  }
  for (const auto &t : form.terms)
  {
    CheckFormSpace(space.kind, t.kind);
  }
  const MacroMesh &mesh = *space.mesh;
  const int d = space.dim, nd = space.ndof_per_el;
  const Basis1D b = MakeBasis1D(space.p, q, open);
  const auto &rule = b.quad;
  std::vector<std::array<int, 3>> mi(nd);
  for (int i = 0; i < nd; i++)
  {
    mi[i] = LocalMultiIndex(space.kind, space.local_dofs[i], d);
  }
  const int np = IPow(q, d);
  std::vector<int> rows, cols;
  std::vector<double> vals;
  rows.reserve(static_cast<std::size_t>(mesh.n_el) * nd * nd);
  cols.reserve(rows.capacity());
  vals.reserve(rows.capacity());

  // Physical value (up to 3 components) and physical derivative quantity (gradient, curl
  // or divergence) of every basis function at one point.
  std::vector<std::array<double, 3>> val(nd), der(nd);
  std::vector<double> K(static_cast<std::size_t>(nd) * nd);
  for (int e = 0; e < mesh.n_el; e++)
  {
    std::fill(K.begin(), K.end(), 0.0);
    for (int k = 0; k < np; k++)
    {
      std::array<int, 3> qi{0, 0, 0};
      Point xi{0.0, 0.0, 0.0};
      double w = 1.0;
      for (int a = 0, r = k; a < d; a++, r /= q)
      {
        qi[a] = r % q;
        xi[a] = rule.points[qi[a]];
        w *= rule.weights[qi[a]];
      }
      Point x;
      std::array<double, 9> J9;
      EvalElementMap(mesh, e, xi, x, J9);
      double J[9] = {0.0}, Ji[9];
      for (int r = 0; r < d; r++)
      {
        for (int c = 0; c < d; c++)
        {
          J[r * d + c] = J9[r * 3 + c];
        }
      }
      const double det = Det(d, J);
      Invert(d, J, Ji);
      for (int i = 0; i < nd; i++)
      {
        const int c = space.local_dofs[i].comp;
        // Reference value of component c and its reference partial derivatives.
        double v = 1.0;
        std::array<double, 3> dv{1.0, 1.0, 1.0};
        for (int a = 0; a < d; a++)
        {
          const bool closed = ClosedAlong(space.kind, c, a);
          const double s = closed ? b.B(qi[a], mi[i][a]) : b.Bo(qi[a], mi[i][a]);
          v *= s;
          for (int m = 0; m < d; m++)
          {
            if (m == a)
            {
              dv[m] *= closed ? b.D(qi[a], mi[i][a]) : 0.0;
            }
            else
            {
              dv[m] *= s;
            }
          }
        }
        std::array<double, 3> ref{0.0, 0.0, 0.0};
        ref[c] = v;
        val[i] = {0.0, 0.0, 0.0};
        der[i] = {0.0, 0.0, 0.0};
        switch (space.kind)
        {
          case SpaceKind::H1:
            val[i][0] = v;
            for (int r = 0; r < d; r++)
            {
              for (int m = 0; m < d; m++)
              {
                der[i][r] += Ji[m * d + r] * dv[m];  // J^{-T} grad_ref
              }
            }
            break;
          case SpaceKind::ND:
          {
            for (int r = 0; r < d; r++)
            {
              for (int m = 0; m < d; m++)
              {
                val[i][r] += Ji[m * d + r] * ref[m];
              }
            }
            // Reference curl of ref (only component c is nonzero).
            std::array<double, 3> cr{0.0, 0.0, 0.0};
            if (d == 2)
            {
              cr[0] = (c == 1) ? dv[0] : -dv[1];
              der[i][0] = cr[0] / det;
            }
            else
            {
              const int i1 = (c + 1) % 3, i2 = (c + 2) % 3;
              // curl(u_c e_c) = d_{i2} u_c e_{i1} - d_{i1} u_c e_{i2}
              cr[i1] = dv[i2];
              cr[i2] = -dv[i1];
              for (int r = 0; r < 3; r++)
              {
                for (int m = 0; m < 3; m++)
                {
                  der[i][r] += J[r * 3 + m] * cr[m] / det;
                }
              }
            }
            break;
          }
          case SpaceKind::RT:
            for (int r = 0; r < d; r++)
            {
              for (int m = 0; m < d; m++)
              {
                val[i][r] += J[r * d + m] * ref[m] / det;
              }
            }
            der[i][0] = dv[c] / det;
            break;
        }
      }
      for (const auto &t : form.terms)
      {
        const double coeff = t.coeff(x, mesh.attributes[e]);
        const bool mass = t.kind == FormKind::Mass;
        const int ncomp = mass ? (space.kind == SpaceKind::H1 ? 1 : d)
                               : EvalOutComponents(space.kind, t.kind, d);
        const double f = coeff * w * det;
        for (int i = 0; i < nd; i++)
        {
          const auto &ui = mass ? val[i] : der[i];
          for (int j = i; j < nd; j++)
          {
            const auto &uj = mass ? val[j] : der[j];
            double s = 0.0;
            for (int r = 0; r < ncomp; r++)
            {
              s += ui[r] * uj[r];
            }
            K[static_cast<std::size_t>(i) * nd + j] += f * s;
          }
        }
      }
    }
    const int *map = &space.restriction.element_map[static_cast<std::size_t>(e) * nd];
    const signed char *sg = &space.restriction.signs[static_cast<std::size_t>(e) * nd];
    for (int i = 0; i < nd; i++)
    {
      for (int j = 0; j < nd; j++)
      {
        const double v = (i <= j) ? K[static_cast<std::size_t>(i) * nd + j]
                                  : K[static_cast<std::size_t>(j) * nd + i];
        rows.push_back(map[i]);
        cols.push_back(map[j]);
        vals.push_back(sg[i] * sg[j] * v);
      }
    }
  }
  return CsrMatrix::FromTriplets(space.n_dofs, space.n_dofs, std::move(rows), std::move(cols),
                                 std::move(vals));
}

namespace
{

// Integrate per-point quantities against the basis of each component and scatter to an
// L-vector. `field(e, k, c)` returns the already weighted reference-space integrand.
template <typename F>
Vector IntegrateAgainstBasis(const FESpace &space, int q, F &&field)
{
  const int d = space.dim, np = IPow(q, d), nd = space.ndof_per_el;
  const Basis1D b = MakeBasis1D(space.p, q);
  const int nc = NumComponents(space.kind, d);
  const int W = IPow(std::max(q, space.p + 1), d);
  Vector ev(static_cast<std::size_t>(space.mesh->n_el) * nd, 0.0);
  ParallelFor(space.mesh->n_el, [&](long e)
              {
                std::vector<double> fld(np), tmp(W), w1(W), w2(W);
                int off = 0;
                for (int c = 0; c < nc; c++)
                {
                  std::array<const DenseMatrix *, 3> M{&b.B, &b.B, &b.B};
                  for (int a = 0; a < d; a++)
                  {
                    M[a] = ClosedAlong(space.kind, c, a) ? &b.B : &b.Bo;
                  }
                  for (int k = 0; k < np; k++)
                  {
                    fld[k] = field(static_cast<int>(e), k, c);
                  }
                  TensorContract(d, M, true, fld.data(), {q, q, q}, tmp.data(), w1.data(),
                                 w2.data());
                  const auto s = ComponentShape(space.kind, d, space.p, c);
                  const int n = s[0] * s[1] * s[2];
                  for (int k = 0; k < n; k++)
                  {
                    ev[e * nd + off + k] = tmp[k];
                  }
                  off += n;
                }
              });
  return RestrictionApplyTranspose(space.restriction, ev);
}

}  // namespace

Vector AssembleRhs(const FESpace &space, const ScalarFunction &f, int q)
{
  Require(space.kind == SpaceKind::H1, "AssembleRhs: scalar load requires an H1 space");
  const GeometricFactors g = ComputeGeometricFactors(*space.mesh, q);
  const int d = space.dim;
  return IntegrateAgainstBasis(space, q, [&](int e, int k, int)
                               {
                                 const std::size_t pt = static_cast<std::size_t>(e) * g.n_points + k;
                                 Point x{0.0, 0.0, 0.0};
                                 for (int c = 0; c < d; c++)
                                 {
                                   x[c] = g.X[pt * d + c];
                                 }
                                 return g.weights[k] * g.detJ[pt] * f(x);
                               });
}

Vector AssembleRhs(const FESpace &space, const VectorFunction &f, int q)
{
  Require(space.kind != SpaceKind::H1, "AssembleRhs: vector load requires an ND or RT space");
  const GeometricFactors g = ComputeGeometricFactors(*space.mesh, q);
  const int d = space.dim;
  return IntegrateAgainstBasis(space, q, [&](int e, int k, int c)
                               {
                                 const std::size_t pt = static_cast<std::size_t>(e) * g.n_points + k;
                                 Point x{0.0, 0.0, 0.0};
                                 for (int a = 0; a < d; a++)
                                 {
                                   x[a] = g.X[pt * d + a];
                                 }
                                 const Point fx = f(x);
                                 const double *J = &g.J[pt * d * d];
                                 double s = 0.0;
                                 if (space.kind == SpaceKind::ND)
                                 {
                                   // f . J^{-T} u_ref det J = (J^{-1} f)_c det J
                                   double Ji[9];
                                   Invert(d, J, Ji);
                                   for (int m = 0; m < d; m++)
                                   {
                                     s += Ji[c * d + m] * fx[m];
                                   }
                                   s *= g.detJ[pt];
                                 }
                                 else
                                 {
                                   // f . J u_ref / det J * det J = (J^T f)_c
                                   for (int m = 0; m < d; m++)
                                   {
                                     s += J[m * d + c] * fx[m];
                                   }
                                 }
                                 return g.weights[k] * s;
                               });
}

Vector InterpolateH1(const FESpace &space, const ScalarFunction &f)
{
  Require(space.kind == SpaceKind::H1, "InterpolateH1: requires an H1 space");
  const auto X = LatticeCoordinates(*space.mesh, space.p);
  const int d = space.dim;
  Vector u(space.n_dofs, 0.0);
  const auto &r = space.restriction;
  for (int g = 0; g < space.n_dofs; g++)
  {
    const int slot = r.indices[r.offsets[g]];
    Point x{0.0, 0.0, 0.0};
    for (int c = 0; c < d; c++)
    {
      x[c] = X[static_cast<std::size_t>(slot) * d + c];
    }
    u[g] = f(x);
  }
  return u;
}

double L2Error(const FESpace &space, std::span<const double> uh, const ScalarFunction &u, int q)
{
  Require(space.kind == SpaceKind::H1, "L2Error: requires an H1 space");
  const GeometricFactors g = ComputeGeometricFactors(*space.mesh, q);
  const Basis1D b = MakeBasis1D(space.p, q);
  const int d = space.dim, np = g.n_points, nd = space.ndof_per_el;
  const int n1 = space.p + 1, W = IPow(std::max(q, n1), d);
  const Vector ue = RestrictionApply(space.restriction, uh);
  double err = 0.0;
  std::vector<double> vals(np), w1(W), w2(W);
  for (int e = 0; e < space.mesh->n_el; e++)
  {
    TensorContract(d, {&b.B, &b.B, &b.B}, false, &ue[static_cast<std::size_t>(e) * nd],
                   {n1, n1, n1}, vals.data(), w1.data(), w2.data());
    for (int k = 0; k < np; k++)
    {
      const std::size_t pt = static_cast<std::size_t>(e) * np + k;
      Point x{0.0, 0.0, 0.0};
      for (int c = 0; c < d; c++)
      {
        x[c] = g.X[pt * d + c];
      }
      const double diff = vals[k] - u(x);
      err += g.weights[k] * g.detJ[pt] * diff * diff;
    }
  }
  return std::sqrt(err);
}

}  // namespace lor
