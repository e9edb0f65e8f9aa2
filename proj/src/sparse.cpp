// SPDX-License-Identifier: Apache-2.0

#include "lor/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <Eigen/Eigenvalues>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <fmt/format.h>

namespace lor
{

double CsrMatrix::Get(int i, int j) const
{
  const auto begin = J.begin() + I[i], end = J.begin() + I[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  return (it != end && *it == j) ? A[it - J.begin()] : 0.0;
}

void CsrMatrix::Validate() const
{
  Require(n_rows >= 0 && n_cols >= 0, "CsrMatrix: negative dimensions");
  Require(static_cast<int>(I.size()) == n_rows + 1 && I[0] == 0, "CsrMatrix: bad row offsets");
  Require(I[n_rows] == static_cast<int>(J.size()) && J.size() == A.size(),
          "CsrMatrix: row offsets do not match nnz");
  for (int i = 0; i < n_rows; i++)
  {
    Require(I[i] <= I[i + 1], "CsrMatrix: row offsets decrease");
    for (int k = I[i]; k < I[i + 1]; k++)
    {
      Require(J[k] >= 0 && J[k] < n_cols, "CsrMatrix: column index out of range");
      Require(k == I[i] || J[k - 1] < J[k], "CsrMatrix: columns not sorted and unique");
    }
  }
}

CsrMatrix CsrMatrix::Identity(int n)
{
  CsrMatrix M;
  M.n_rows = M.n_cols = n;
  M.I.resize(n + 1);
  std::iota(M.I.begin(), M.I.end(), 0);
  M.J.resize(n);
  std::iota(M.J.begin(), M.J.end(), 0);
  M.A.assign(n, 1.0);
  return M;
}

CsrMatrix CsrMatrix::FromTriplets(int n_rows, int n_cols, std::vector<int> rows,
                                  std::vector<int> cols, std::vector<double> vals)
{
  Require(rows.size() == cols.size() && rows.size() == vals.size(),
          "FromTriplets: array size mismatch");
  const std::size_t n = rows.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t k = 0; k < n; k++)
  {
    Require(rows[k] >= 0 && rows[k] < n_rows && cols[k] >= 0 && cols[k] < n_cols,
            "FromTriplets: index out of range");
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b)
                   { return rows[a] != rows[b] ? rows[a] < rows[b] : cols[a] < cols[b]; });
  CsrMatrix M;
  M.n_rows = n_rows;
  M.n_cols = n_cols;
  M.I.assign(n_rows + 1, 0);
  for (std::size_t k = 0; k < n; k++)
  {
    const std::size_t t = order[k];
    if (k > 0 && rows[order[k - 1]] == rows[t] && cols[order[k - 1]] == cols[t])
    {
      M.A.back() += vals[t];
      continue;
    }
    M.J.push_back(cols[t]);
    M.A.push_back(vals[t]);
    M.I[rows[t] + 1]++;
  }
  std::partial_sum(M.I.begin(), M.I.end(), M.I.begin());
  return M;
}

CsrMatrix CsrMatrix::FromDense(int n_rows, int n_cols, std::span<const double> dense)
{
  Require(dense.size() == static_cast<std::size_t>(n_rows) * n_cols, "FromDense: size mismatch");
  CsrMatrix M;
  M.n_rows = n_rows;
  M.n_cols = n_cols;
  M.I.assign(n_rows + 1, 0);
  for (int i = 0; i < n_rows; i++)
  {
    for (int j = 0; j < n_cols; j++)
    {
      const double v = dense[static_cast<std::size_t>(i) * n_cols + j];
      if (v != 0.0)
      {
        M.J.push_back(j);
        M.A.push_back(v);
      }
    }
    M.I[i + 1] = static_cast<int>(M.J.size());
  }
  return M;
}

std::vector<double> CsrMatrix::ToDense() const
{
  std::vector<double> D(static_cast<std::size_t>(n_rows) * n_cols, 0.0);
  for (int i = 0; i < n_rows; i++)
  {
    for (int k = I[i]; k < I[i + 1]; k++)
    {
      D[static_cast<std::size_t>(i) * n_cols + J[k]] += A[k];
    }
  }
  return D;
}

void Spmv(const CsrMatrix &A, std::span<const double> x, std::span<double> y)
{
  Require(static_cast<int>(x.size()) == A.n_cols && static_cast<int>(y.size()) == A.n_rows,
          "Spmv: shape mismatch");
  const int *I = A.I.data(), *J = A.J.data();
  const double *V = A.A.data();
  ParallelFor(A.n_rows, [&](long i)
              {
                double s = 0.0;
                for (int k = I[i]; k < I[i + 1]; k++)
                {
                  s += V[k] * x[J[k]];
                }
                y[i] = s;
              });
}

Vector Spmv(const CsrMatrix &A, std::span<const double> x)
{
  Vector y(A.n_rows);
  Spmv(A, x, y);
  return y;
}

void SpmvTranspose(const CsrMatrix &A, std::span<const double> x, std::span<double> y)
{
  Require(static_cast<int>(x.size()) == A.n_rows && static_cast<int>(y.size()) == A.n_cols,
          "SpmvTranspose: shape mismatch");
  std::fill(y.begin(), y.end(), 0.0);
  for (int i = 0; i < A.n_rows; i++)
  {
    for (int k = A.I[i]; k < A.I[i + 1]; k++)
    {
      y[A.J[k]] += A.A[k] * x[i];
    }
  }
}

Vector SpmvTranspose(const CsrMatrix &A, std::span<const double> x)
{
  Vector y(A.n_cols);
  SpmvTranspose(A, x, y);
  return y;
}

CsrMatrix Transpose(const CsrMatrix &A)
{
  CsrMatrix T;
  T.n_rows = A.n_cols;
  T.n_cols = A.n_rows;
  T.I.assign(T.n_rows + 1, 0);
  for (int j : A.J)
  {
    T.I[j + 1]++;
  }
  std::partial_sum(T.I.begin(), T.I.end(), T.I.begin());
  T.J.resize(A.J.size());
  T.A.resize(A.A.size());
  std::vector<int> next(T.I.begin(), T.I.end() - 1);
  for (int i = 0; i < A.n_rows; i++)
  {
    for (int k = A.I[i]; k < A.I[i + 1]; k++)
    {
      const int p = next[A.J[k]]++;
      T.J[p] = i;
      T.A[p] = A.A[k];
    }
  }
  return T;
}

CsrMatrix Spgemm(const CsrMatrix &A, const CsrMatrix &B, bool prune_zeros)
{
  Require(A.n_cols == B.n_rows, "Spgemm: inner dimensions do not match");
  CsrMatrix C;
  C.n_rows = A.n_rows;
  C.n_cols = B.n_cols;
  C.I.assign(C.n_rows + 1, 0);

  // Symbolic pass: distinct columns per row.
  ParallelFor(A.n_rows, [&](long i)
              {
                thread_local std::vector<int> marker;
                if (static_cast<int>(marker.size()) < B.n_cols)
                {
                  marker.assign(B.n_cols, -1);
                }
                int count = 0;
                for (int ka = A.I[i]; ka < A.I[i + 1]; ka++)
                {
                  const int k = A.J[ka];
                  for (int kb = B.I[k]; kb < B.I[k + 1]; kb++)
                  {
                    const int j = B.J[kb];
                    if (marker[j] != static_cast<int>(i))
                    {
                      marker[j] = static_cast<int>(i);
                      count++;
                    }
                  }
                }
                C.I[i + 1] = count;
                // Reset so the marker can be reused by a later call with different rows.
                for (int ka = A.I[i]; ka < A.I[i + 1]; ka++)
                {
                  const int k = A.J[ka];
                  for (int kb = B.I[k]; kb < B.I[k + 1]; kb++)
                  {
                    marker[B.J[kb]] = -1;
                  }
                }
              });
  std::partial_sum(C.I.begin(), C.I.end(), C.I.begin());
  C.J.resize(C.I[C.n_rows]);
  C.A.resize(C.I[C.n_rows]);

  // Numeric pass with a dense accumulator.
  ParallelFor(A.n_rows, [&](long i)
              {
                thread_local std::vector<int> pos;
                if (static_cast<int>(pos.size()) < B.n_cols)
                {
                  pos.assign(B.n_cols, -1);
                }
                int *Jc = C.J.data() + C.I[i];
                double *Ac = C.A.data() + C.I[i];
                int len = 0;
                for (int ka = A.I[i]; ka < A.I[i + 1]; ka++)
                {
                  const int k = A.J[ka];
                  const double a = A.A[ka];
                  for (int kb = B.I[k]; kb < B.I[k + 1]; kb++)
                  {
                    const int j = B.J[kb];
                    if (pos[j] < 0)
                    {
                      pos[j] = len;
                      Jc[len] = j;
                      Ac[len] = a * B.A[kb];
                      len++;
                    }
                    else
                    {
                      Ac[pos[j]] += a * B.A[kb];
                    }
                  }
                }
                std::vector<std::pair<int, double>> row(len);
                for (int t = 0; t < len; t++)
                {
                  row[t] = {Jc[t], Ac[t]};
                  pos[Jc[t]] = -1;
                }
                std::sort(row.begin(), row.end(),
                          [](const auto &a, const auto &b) { return a.first < b.first; });
                for (int t = 0; t < len; t++)
                {
                  Jc[t] = row[t].first;
                  Ac[t] = row[t].second;
                }
              });
  return prune_zeros ? PruneZeros(C) : C;
}

CsrMatrix PruneZeros(const CsrMatrix &A)
{
  CsrMatrix C;
  C.n_rows = A.n_rows;
  C.n_cols = A.n_cols;
  C.I.assign(A.n_rows + 1, 0);
  for (int i = 0; i < A.n_rows; i++)
  {
    for (int k = A.I[i]; k < A.I[i + 1]; k++)
    {
      if (A.A[k] != 0.0)
      {
        C.J.push_back(A.J[k]);
        C.A.push_back(A.A[k]);
      }
    }
    C.I[i + 1] = static_cast<int>(C.J.size());
  }
  return C;
}

CsrMatrix Add(const CsrMatrix &A, const CsrMatrix &B, double alpha, double beta)
{
  Require(A.n_rows == B.n_rows && A.n_cols == B.n_cols, "Add: shape mismatch");
  CsrMatrix C;
  C.n_rows = A.n_rows;
  C.n_cols = A.n_cols;
  C.I.assign(A.n_rows + 1, 0);
  C.J.reserve(A.J.size() + B.J.size());
  C.A.reserve(A.J.size() + B.J.size());
  for (int i = 0; i < A.n_rows; i++)
  {
    int ka = A.I[i], kb = B.I[i];
    const int ea = A.I[i + 1], eb = B.I[i + 1];
    while (ka < ea || kb < eb)
    {
      const int ja = (ka < ea) ? A.J[ka] : C.n_cols;
      const int jb = (kb < eb) ? B.J[kb] : C.n_cols;
      if (ja == jb)
      {
        C.J.push_back(ja);
        C.A.push_back(alpha * A.A[ka++] + beta * B.A[kb++]);
      }
      else if (ja < jb)
      {
        C.J.push_back(ja);
        C.A.push_back(alpha * A.A[ka++]);
      }
      else
      {
        C.J.push_back(jb);
        C.A.push_back(beta * B.A[kb++]);
      }
    }
    C.I[i + 1] = static_cast<int>(C.J.size());
  }
  return C;
}

CsrMatrix Rap(const CsrMatrix &P, const CsrMatrix &A, bool symmetric)
{
  Require(A.n_rows == A.n_cols && P.n_rows == A.n_cols, "Rap: dimension mismatch");
  const CsrMatrix AP = Spgemm(A, P);
  CsrMatrix C = Spgemm(Transpose(P), AP);
  if (symmetric)
  {
    C = Add(C, Transpose(C), 0.5, 0.5);
  }
  return C;
}

double SymmetryError(const CsrMatrix &A)
{
  if (A.n_rows != A.n_cols)
  {
    return INFINITY;
  }
  const CsrMatrix D = Add(A, Transpose(A), 1.0, -1.0);
  return MaxAbs(D);
}

double MaxAbs(const CsrMatrix &A)
{
  double m = 0.0;
  for (double v : A.A)
  {
    m = std::max(m, std::abs(v));
  }
  return m;
}

CholeskyFactor CholeskyFactorize(const CsrMatrix &A)
{
  Require(A.n_rows == A.n_cols, "CholeskyFactorize: matrix must be square");
  const int n = A.n_rows;
  CholeskyFactor F;
  F.n = n;

  // Fill-reducing ordering.
  {
    Eigen::SparseMatrix<double, Eigen::ColMajor, int> S(n, n);
    std::vector<Eigen::Triplet<double, int>> trip;
    trip.reserve(A.J.size());
    for (int i = 0; i < n; i++)
    {
      for (int k = A.I[i]; k < A.I[i + 1]; k++)
      {
        trip.emplace_back(i, A.J[k], 1.0);
      }
    }
    S.setFromTriplets(trip.begin(), trip.end());
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm;
    Eigen::AMDOrdering<int> amd;
    amd(S, perm);
    F.perm.assign(perm.indices().data(), perm.indices().data() + n);
  }
  F.iperm.resize(n);
  for (int k = 0; k < n; k++)
  {
    F.iperm[F.perm[k]] = k;
  }

  // Upper triangle of C = P A P^T by columns: column k holds C(i, k), i <= k, taken from
  // row perm[k] of A by symmetry.
  std::vector<int> Cp(n + 1, 0), Ci;
  std::vector<double> Cx;
  for (int k = 0; k < n; k++)
  {
    const int r = F.perm[k];
    for (int t = A.I[r]; t < A.I[r + 1]; t++)
    {
      const int i = F.iperm[A.J[t]];
      if (i <= k)
      {
        Ci.push_back(i);
        Cx.push_back(A.A[t]);
      }
    }
    Cp[k + 1] = static_cast<int>(Ci.size());
  }

  // Elimination tree.
  std::vector<int> parent(n, -1), ancestor(n, -1);
  for (int k = 0; k < n; k++)
  {
    for (int t = Cp[k]; t < Cp[k + 1]; t++)
    {
      for (int i = Ci[t]; i != -1 && i < k;)
      {
        const int inext = ancestor[i];
        ancestor[i] = k;
        if (inext == -1)
        {
          parent[i] = k;
        }
        i = inext;
      }
    }
  }

  // Nonzero pattern of row k of L: the reach of column k's entries in the etree.
  std::vector<int> stack(n), flag(n, -1);
  auto ereach = [&](int k)
  {
    int top = n;
    flag[k] = k;
    for (int t = Cp[k]; t < Cp[k + 1]; t++)
    {
      int i = Ci[t];
      if (i > k)
      {
        continue;
      }
      int len = 0;
      for (; flag[i] != k; i = parent[i])
      {
        stack[len++] = i;
        flag[i] = k;
      }
      while (len > 0)
      {
        stack[--top] = stack[--len];
      }
    }
    return top;
  };

  std::vector<int> counts(n, 1);
  for (int k = 0; k < n; k++)
  {
    for (int top = ereach(k); top < n; top++)
    {
      counts[stack[top]]++;
    }
  }
  F.Lp.assign(n + 1, 0);
  for (int j = 0; j < n; j++)
  {
    F.Lp[j + 1] = F.Lp[j] + counts[j];
  }
  F.Li.resize(F.Lp[n]);
  F.Lx.resize(F.Lp[n]);

  std::fill(flag.begin(), flag.end(), -1);
  std::vector<int> c(F.Lp.begin(), F.Lp.end() - 1);
  std::vector<double> x(n, 0.0);
  for (int k = 0; k < n; k++)
  {
    const int top0 = ereach(k);
    for (int t = Cp[k]; t < Cp[k + 1]; t++)
    {
      if (Ci[t] <= k)
      {
        x[Ci[t]] += Cx[t];
      }
    }
    double d = x[k];
    x[k] = 0.0;
    for (int top = top0; top < n; top++)
    {
      const int i = stack[top];
      const double lki = x[i] / F.Lx[F.Lp[i]];
      x[i] = 0.0;
      for (int p = F.Lp[i] + 1; p < c[i]; p++)
      {
        x[F.Li[p]] -= F.Lx[p] * lki;
      }
      d -= lki * lki;
      const int p = c[i]++;
      F.Li[p] = k;
      F.Lx[p] = lki;
    }
    if (!(d > 0.0))
    {
      throw NotSpdError(fmt::format("CholeskyFactorize: non-positive pivot {} at step {} "
                                    "(original row {})",
                                    d, k, F.perm[k]),
                        k);
    }
    const int p = c[k]++;
    F.Li[p] = k;
    F.Lx[p] = std::sqrt(d);
  }
  return F;
}

void CholeskySolve(const CholeskyFactor &F, std::span<const double> b, std::span<double> x)
{
  Require(static_cast<int>(b.size()) == F.n && static_cast<int>(x.size()) == F.n,
          "CholeskySolve: size mismatch");
  std::vector<double> y(F.n);
  for (int k = 0; k < F.n; k++)
  {
    y[k] = b[F.perm[k]];
  }
  for (int j = 0; j < F.n; j++)
  {
    y[j] /= F.Lx[F.Lp[j]];
    for (int p = F.Lp[j] + 1; p < F.Lp[j + 1]; p++)
    {
      y[F.Li[p]] -= F.Lx[p] * y[j];
    }
  }
  for (int j = F.n - 1; j >= 0; j--)
  {
    for (int p = F.Lp[j] + 1; p < F.Lp[j + 1]; p++)
    {
      y[j] -= F.Lx[p] * y[F.Li[p]];
    }
    y[j] /= F.Lx[F.Lp[j]];
  }
  for (int k = 0; k < F.n; k++)
  {
    x[F.perm[k]] = y[k];
  }
}

Vector CholeskySolve(const CholeskyFactor &F, std::span<const double> b)
{
  Vector x(F.n);
  CholeskySolve(F, b, x);
  return x;
}

std::pair<double, double> TridiagonalExtremes(std::span<const double> diag,
                                              std::span<const double> off)
{
  const int m = static_cast<int>(diag.size());
  Require(m >= 1 && static_cast<int>(off.size()) >= m - 1, "TridiagonalExtremes: bad sizes");
  if (m == 1)
  {
    return {diag[0], diag[0]};
  }
  Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(diag.data(), m);
  Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(off.data(), m - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  return {solver.eigenvalues().minCoeff(), solver.eigenvalues().maxCoeff()};
}

LanczosResult LanczosExtremes(const LinearOperator &M, int n, int iters,
                              const LinearOperator &gram, unsigned seed)
{
  Require(n >= 1 && iters >= 1, "LanczosExtremes: invalid size or iteration count");
  iters = std::min(iters, n);
  Vector tmp(n);
  auto gdot = [&](const Vector &u, const Vector &v)
  {
    if (!gram)
    {
      return Dot(u, v);
    }
    gram(v, tmp);
    return Dot(u, tmp);
  };

  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<Vector> V;
  Vector v(n);
  for (auto &t : v)
  {
    t = dist(gen);
  }
  double nv = std::sqrt(gdot(v, v));
  for (auto &t : v)
  {
    t /= nv;
  }
  V.push_back(v);

  std::vector<double> alpha, beta;
  LanczosResult res;
  Vector w(n), gw(n);
  for (int j = 0; j < iters; j++)
  {
    M(V[j], w);
    const double a = gdot(w, V[j]);
    alpha.push_back(a);
    res.iterations = j + 1;
    if (j == iters - 1)
    {
      break;
    }
    // Two passes of classical Gram-Schmidt against all Lanczos vectors.
    for (int pass = 0; pass < 2; pass++)
    {
      if (gram)
      {
        gram(w, gw);
      }
      else
      {
        gw = w;
      }
      std::vector<double> coef(V.size());
      for (std::size_t i = 0; i < V.size(); i++)
      {
        coef[i] = Dot(gw, V[i]);
      }
      for (std::size_t i = 0; i < V.size(); i++)
      {
        for (int t = 0; t < n; t++)
        {
          w[t] -= coef[i] * V[i][t];
        }
      }
    }
    const double b = std::sqrt(std::max(gdot(w, w), 0.0));
    const double scale = std::max(std::abs(a), beta.empty() ? 0.0 : beta.back());
    if (b <= 1e-13 * std::max(scale, 1e-300))
    {
      res.breakdown = true;
      break;
    }
    beta.push_back(b);
    for (auto &t : w)
    {
      t /= b;
    }
    V.push_back(w);
  }
  const auto [lo, hi] =
      TridiagonalExtremes(alpha, std::span<const double>(beta.data(), alpha.size() - 1));
  res.lambda_min = lo;
  res.lambda_max = hi;
  return res;
}

void WriteMatrixMarket(const CsrMatrix &A, const std::string &path)
{
  std::ofstream out(path);
  Require(static_cast<bool>(out), "WriteMatrixMarket: cannot open " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.n_rows << " " << A.n_cols << " " << A.Nnz() << "\n";
  for (int i = 0; i < A.n_rows; i++)
  {
    for (int k = A.I[i]; k < A.I[i + 1]; k++)
    {
      out << fmt::format("{} {} {:.17g}\n", i + 1, A.J[k] + 1, A.A[k]);
    }
  }
}

CsrMatrix ReadMatrixMarket(const std::string &path)
{
  std::ifstream in(path);
  Require(static_cast<bool>(in), "ReadMatrixMarket: cannot open " + path);
  std::string line;
  std::getline(in, line);
  Require(line.rfind("%%MatrixMarket matrix coordinate real", 0) == 0,
          "ReadMatrixMarket: unsupported header");
  const bool symmetric = line.find("symmetric") != std::string::npos;
  while (std::getline(in, line) && (line.empty() || line[0] == '%'))
  {
  }
  std::istringstream hdr(line);
  long m = 0, n = 0, nnz = 0;
  hdr >> m >> n >> nnz;
  Require(static_cast<bool>(hdr) && m >= 0 && n >= 0 && nnz >= 0,
          "ReadMatrixMarket: bad size line");
  std::vector<int> rows, cols;
  std::vector<double> vals;
  for (long k = 0; k < nnz; k++)
  {
    long i, j;
    double v;
    in >> i >> j >> v;
    Require(static_cast<bool>(in), "ReadMatrixMarket: truncated entry list");
    rows.push_back(static_cast<int>(i - 1));
    cols.push_back(static_cast<int>(j - 1));
    vals.push_back(v);
    if (symmetric && i != j)
    {
      rows.push_back(static_cast<int>(j - 1));
      cols.push_back(static_cast<int>(i - 1));
      vals.push_back(v);
    }
  }
  return CsrMatrix::FromTriplets(static_cast<int>(m), static_cast<int>(n), rows, cols, vals);
}

}  // namespace lor
