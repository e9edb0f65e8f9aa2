// SPDX-License-Identifier: Apache-2.0

#include "lor/amg.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <fmt/format.h>

namespace lor
{

CsrMatrix StrengthOfConnection(const CsrMatrix &A, double theta)
{
  Require(A.n_rows == A.n_cols, "StrengthOfConnection: matrix must be square");
  CsrMatrix S;
  S.n_rows = S.n_cols = A.n_rows;
  S.I.assign(A.n_rows + 1, 0);
  for (int i = 0; i < A.n_rows; i++)
  {
    double diag = 0.0;
    for (int k = A.I[i]; k < A.I[i + 1]; k++)
    {
      if (A.J[k] == i)
      {
        diag = A.A[k];
      }
    }
    // Connections of the opposite sign to the diagonal are the candidate strong ones.
    const double sgn = diag < 0.0 ? -1.0 : 1.0;
    double max_off = 0.0;
    for (int k = A.I[i]; k < A.I[i + 1]; k++)
    {
      if (A.J[k] != i)
      {
        max_off = std::max(max_off, -sgn * A.A[k]);
      }
    }
    if (max_off > 0.0)
    {
      for (int k = A.I[i]; k < A.I[i + 1]; k++)
      {
        if (A.J[k] != i && -sgn * A.A[k] >= theta * max_off)
        {
          S.J.push_back(A.J[k]);
          S.A.push_back(1.0);
        }
      }
    }
    S.I[i + 1] = static_cast<int>(S.J.size());
  }
  return S;
}

std::vector<int> RugeStuebenSplitting(const CsrMatrix &S)
{
  const int n = S.n_rows;
  const CsrMatrix ST = Transpose(S);
  constexpr int kUndecided = -1, kFine = 0, kCoarse = 1;
  std::vector<int> cf(n, kUndecided), lambda(n);
  std::set<std::pair<int, int>> queue;  // (-lambda, i): largest measure, then lowest index
  for (int i = 0; i < n; i++)
  {
    lambda[i] = ST.RowNnz(i);
    if (S.RowNnz(i) == 0 && ST.RowNnz(i) == 0)
    {
      cf[i] = kFine;  // isolated
    }
    else
    {
      queue.insert({-lambda[i], i});
    }
  }
  auto bump = [&](int k, int delta)
  {
    if (cf[k] != kUndecided)
    {
      return;
    }
    queue.erase({-lambda[k], k});
    lambda[k] += delta;
    queue.insert({-lambda[k], k});
  };
  while (!queue.empty())
  {
    const int i = queue.begin()->second;
    queue.erase(queue.begin());
    if (lambda[i] == 0)
    {
      // Nothing depends on the remaining points: they become fine points.
      cf[i] = kFine;
      for (const auto &q : queue)
      {
        cf[q.second] = kFine;
      }
      break;
    }
    cf[i] = kCoarse;
    for (int k = ST.I[i]; k < ST.I[i + 1]; k++)
    {
      const int j = ST.J[k];
      if (cf[j] != kUndecided)
      {
        continue;
      }
      queue.erase({-lambda[j], j});
      cf[j] = kFine;
      for (int m = S.I[j]; m < S.I[j + 1]; m++)
      {
        bump(S.J[m], +1);
      }
    }
    for (int k = S.I[i]; k < S.I[i + 1]; k++)
    {
      bump(S.J[k], -1);
    }
  }
  for (int i = 0; i < n; i++)
  {
    if (cf[i] == kUndecided)
    {
      cf[i] = kFine;
    }
  }

  // Second pass: strongly connected F-F pairs must share a strong C point.
  std::vector<int> marker(n, -1);
  for (int i = 0; i < n; i++)
  {
    if (cf[i] != kFine)
    {
      continue;
    }
    for (int k = S.I[i]; k < S.I[i + 1]; k++)
    {
      if (cf[S.J[k]] == kCoarse)
      {
        marker[S.J[k]] = i;
      }
    }
    for (int k = S.I[i]; k < S.I[i + 1]; k++)
    {
      const int j = S.J[k];
      if (cf[j] != kFine)
      {
        continue;
      }
      bool shared = false;
      for (int m = S.I[j]; m < S.I[j + 1] && !shared; m++)
      {
        shared = cf[S.J[m]] == kCoarse && marker[S.J[m]] == i;
      }
      if (!shared)
      {
        cf[j] = kCoarse;
        marker[j] = i;
      }
    }
  }
  return cf;
}

CsrMatrix DirectInterpolation(const CsrMatrix &A, const CsrMatrix &S, const std::vector<int> &cf,
                              const AmgParams &params)
{
  const int n = A.n_rows;
  std::vector<int> coarse_index(n, -1);
  int nc = 0;
  for (int i = 0; i < n; i++)
  {
    if (cf[i] == 1)
    {
      coarse_index[i] = nc++;
    }
  }
  CsrMatrix P;
  P.n_rows = n;
  P.n_cols = nc;
  P.I.assign(n + 1, 0);
  std::vector<char> strong(n, 0);
  std::vector<std::pair<int, double>> row;
  for (int i = 0; i < n; i++)
  {
    row.clear();
    if (cf[i] == 1)
    {
      row.push_back({coarse_index[i], 1.0});
    }
    else
    {
      for (int k = S.I[i]; k < S.I[i + 1]; k++)
      {
        strong[S.J[k]] = 1;
      }
      double diag = 0.0, sum_neg = 0.0, sum_pos = 0.0, c_neg = 0.0, c_pos = 0.0;
      for (int k = A.I[i]; k < A.I[i + 1]; k++)
      {
        const int j = A.J[k];
        const double a = A.A[k];
        if (j == i)
        {
          diag = a;
          continue;
        }
        (a < 0.0 ? sum_neg : sum_pos) += a;
        if (cf[j] == 1 && strong[j])
        {
          (a < 0.0 ? c_neg : c_pos) += a;
        }
      }
      if (c_pos == 0.0)
      {
        diag += sum_pos;
      }
      const double alpha = (c_neg != 0.0) ? sum_neg / c_neg : 0.0;
      const double beta = (c_pos != 0.0) ? sum_pos / c_pos : 0.0;
      for (int k = A.I[i]; k < A.I[i + 1]; k++)
      {
        const int j = A.J[k];
        if (j != i && cf[j] == 1 && strong[j] && diag != 0.0)
        {
          const double a = A.A[k];
          row.push_back({coarse_index[j], -(a < 0.0 ? alpha : beta) * a / diag});
        }
      }
      for (int k = S.I[i]; k < S.I[i + 1]; k++)
      {
        strong[S.J[k]] = 0;
      }
      if (params.truncate && !row.empty())
      {
        double wmax = 0.0, total = 0.0, kept = 0.0;
        for (const auto &[c, w] : row)
        {
          wmax = std::max(wmax, std::abs(w));
          total += w;
        }
        std::erase_if(row, [&](const auto &e)
                      { return std::abs(e.second) < params.trunc_factor * wmax; });
        for (const auto &[c, w] : row)
        {
          kept += w;
        }
        if (kept != 0.0)
        {
          for (auto &e : row)
          {
            e.second *= total / kept;
          }
        }
      }
      std::sort(row.begin(), row.end());
    }
    for (const auto &[c, w] : row)
    {
      P.J.push_back(c);
      P.A.push_back(w);
    }
    P.I[i + 1] = static_cast<int>(P.J.size());
  }
  return P;
}

namespace
{

Vector InverseDiagonal(const CsrMatrix &A)
{
  Vector d(A.n_rows, 0.0);
  for (int i = 0; i < A.n_rows; i++)
  {
    const double a = A.Get(i, i);
    Require(a != 0.0, fmt::format("AmgHierarchy: zero diagonal in row {}", i));
    d[i] = 1.0 / a;
  }
  return d;
}

}  // namespace

AmgHierarchy::AmgHierarchy(const CsrMatrix &A, const AmgParams &params) : params_(params)
{
  Require(A.n_rows == A.n_cols && A.n_rows > 0, "AmgHierarchy: matrix must be square and nonempty");
  Require(params.max_levels >= 1 && params.coarse_size >= 1, "AmgHierarchy: invalid parameters");
  Require(SymmetryError(A) <= params.symmetry_tol * MaxAbs(A),
          "AmgHierarchy: matrix is not symmetric");
  levels_.push_back({A, {}, {}, InverseDiagonal(A)});
  while (static_cast<int>(levels_.size()) < params.max_levels &&
         levels_.back().A.n_rows > params.coarse_size)
  {
    AmgLevel &fine = levels_.back();
    const CsrMatrix S = StrengthOfConnection(fine.A, params.theta);
    const auto cf = RugeStuebenSplitting(S);
    const int nc = static_cast<int>(std::count(cf.begin(), cf.end(), 1));
    if (nc == 0 || nc >= fine.A.n_rows)
    {
      break;
    }
    fine.P = DirectInterpolation(fine.A, S, cf, params);
    fine.R = Transpose(fine.P);
    CsrMatrix Ac = Rap(fine.P, fine.A, true);
    Vector dc = InverseDiagonal(Ac);
    levels_.push_back({std::move(Ac), {}, {}, std::move(dc)});
  }
  coarse_ = CholeskyFactorize(levels_.back().A);
  const int L = NumLevels();
  r_.resize(L);
  bc_.resize(L);
  xc_.resize(L);
  for (int l = 0; l < L; l++)
  {
    r_[l].resize(levels_[l].A.n_rows);
    if (l + 1 < L)
    {
      bc_[l + 1].resize(levels_[l + 1].A.n_rows);
      xc_[l + 1].resize(levels_[l + 1].A.n_rows);
    }
  }
}

double AmgHierarchy::OperatorComplexity() const
{
  double s = 0.0;
  for (const auto &l : levels_)
  {
    s += static_cast<double>(l.A.Nnz());
  }
  return s / static_cast<double>(levels_[0].A.Nnz());
}

double AmgHierarchy::GridComplexity() const
{
  double s = 0.0;
  for (const auto &l : levels_)
  {
    s += l.A.n_rows;
  }
  return s / levels_[0].A.n_rows;
}

void AmgHierarchy::Smooth(int l, std::span<const double> b, std::span<double> x,
                          bool forward) const
{
  const CsrMatrix &A = levels_[l].A;
  const Vector &dinv = levels_[l].inv_diag;
  const int n = A.n_rows;
  if (params_.smoother == AmgSmoother::Jacobi)
  {
    Vector &r = r_[l];
    Spmv(A, x, r);
    for (int i = 0; i < n; i++)
    {
      x[i] += params_.jacobi_weight * dinv[i] * (b[i] - r[i]);
    }
    return;
  }
  for (int t = 0; t < n; t++)
  {
    const int i = forward ? t : n - 1 - t;
    double s = b[i];
    for (int k = A.I[i]; k < A.I[i + 1]; k++)
    {
      if (A.J[k] != i)
      {
        s -= A.A[k] * x[A.J[k]];
      }
    }
    x[i] = s * dinv[i];
  }
}

void AmgHierarchy::Cycle(int l, std::span<const double> b, std::span<double> x) const
{
  if (l == NumLevels() - 1)
  {
    CholeskySolve(coarse_, b, x);
    return;
  }
  const AmgLevel &lev = levels_[l];
  Smooth(l, b, x, true);
  Vector &r = r_[l];
  Spmv(lev.A, x, r);
  for (int i = 0; i < lev.A.n_rows; i++)
  {
    r[i] = b[i] - r[i];
  }
  Vector &bc = bc_[l + 1], &xc = xc_[l + 1];
  Spmv(lev.R, r, bc);
  std::fill(xc.begin(), xc.end(), 0.0);
  Cycle(l + 1, bc, xc);
  Spmv(lev.P, xc, r);
  for (int i = 0; i < lev.A.n_rows; i++)
  {
    x[i] += r[i];
  }
  Smooth(l, b, x, false);
}

void AmgHierarchy::VCycle(std::span<const double> b, std::span<double> x) const
{
  Require(static_cast<int>(b.size()) == Height() && static_cast<int>(x.size()) == Height(),
          "AmgHierarchy::VCycle: size mismatch");
  Cycle(0, b, x);
}

void AmgHierarchy::Mult(std::span<const double> b, std::span<double> x) const
{
  Require(static_cast<int>(x.size()) == Height(), "AmgHierarchy::Mult: size mismatch");
  std::fill(x.begin(), x.end(), 0.0);
  VCycle(b, x);
}

std::string AmgHierarchy::Report() const
{
  std::string s = fmt::format("{:>5} {:>10} {:>12} {:>10}\n", "level", "rows", "nnz", "nnz/row");
  for (int l = 0; l < NumLevels(); l++)
  {
    const auto &A = levels_[l].A;
    s += fmt::format("{:>5} {:>10} {:>12} {:>10.2f}\n", l, A.n_rows, A.Nnz(),
                     static_cast<double>(A.Nnz()) / A.n_rows);
  }
  s += fmt::format("operator complexity {:.4f}\ngrid complexity {:.4f}\n", OperatorComplexity(),
                   GridComplexity());
  return s;
}

}  // namespace lor
