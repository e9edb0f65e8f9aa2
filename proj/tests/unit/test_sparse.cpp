// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>
#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <random>
#include "lor/lorasm.hpp"
#include "lor/pa.hpp"
#include "oracles.hpp"

using namespace lor;

namespace
{

CsrMatrix RandomSparse(int m, int n, double density, std::mt19937 &gen)
{
  std::uniform_real_distribution<double> U(-1.0, 1.0), P(0.0, 1.0);
  std::vector<int> r, c;
  std::vector<double> v;
  for (int i = 0; i < m; i++)
  {
    for (int j = 0; j < n; j++)
    {
      if (P(gen) < density)
      {
        r.push_back(i);
        c.push_back(j);
        v.push_back(U(gen));
      }
    }
  }
  return CsrMatrix::FromTriplets(m, n, r, c, v);
}

CsrMatrix RandomSpd(int n, double density, std::mt19937 &gen)
{
  auto B = RandomSparse(n, n, density, gen);
  auto A = Spgemm(Transpose(B), B);
  return Add(A, CsrMatrix::Identity(n), 1.0, 1.0);
}

// Sparsity pattern of a matrix as a 0/1 dense matrix.
Eigen::MatrixXd Pattern(const CsrMatrix &A)
{
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(A.n_rows, A.n_cols);
  for (int i = 0; i < A.n_rows; i++)
  {
    for (int k = A.I[i]; k < A.I[i + 1]; k++)
    {
      D(i, A.J[k]) = 1.0;
    }
  }
  return D;
}

CsrMatrix Poisson1D(int n)
{
  std::vector<int> r, c;
  std::vector<double> v;
  for (int i = 0; i < n; i++)
  {
    r.push_back(i), c.push_back(i), v.push_back(2.0);
    if (i > 0)
    {
      r.push_back(i), c.push_back(i - 1), v.push_back(-1.0);
    }
    if (i + 1 < n)
    {
      r.push_back(i), c.push_back(i + 1), v.push_back(-1.0);
    }
  }
  return CsrMatrix::FromTriplets(n, n, r, c, v);
}

}  // namespace

TEST_CASE("Sparse matrix-vector products", "[sparse]")
{
  auto I = CsrMatrix::Identity(7);
  Vector x{1, 2, 3, 4, 5, 6, 7};
  CHECK(Spmv(I, x) == x);
  auto A = CsrMatrix::FromDense(2, 2, std::vector<double>{2, -1, -1, 2});
  CHECK(Spmv(A, Vector{1, 1}) == Vector{1, 1});
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto R = RandomSparse(50, 50, 0.1, gen);
  R.Validate();
  Eigen::VectorXd xe(50);
  Vector xv(50);
  for (int i = 0; i < 50; i++)
  {
    xv[i] = xe[i] = U(gen);
  }
  const auto D = oracle::Dense(R);
  const Eigen::VectorXd y = D * xe, yt = D.transpose() * xe;
  const auto ys = Spmv(R, xv), yts = SpmvTranspose(R, xv);
  for (int i = 0; i < 50; i++)
  {
    CHECK(std::abs(ys[i] - y[i]) <= 1e-13 * std::max(1.0, y.cwiseAbs().maxCoeff()));
    CHECK(std::abs(yts[i] - yt[i]) <= 1e-13 * std::max(1.0, yt.cwiseAbs().maxCoeff()));
  }
  CHECK(oracle::Dense(Transpose(R)) == D.transpose());
  CHECK_THROWS_AS(Spmv(R, Vector(49)), std::invalid_argument);
}

TEST_CASE("Sparse matrix-matrix products", "[sparse]")
{
  std::mt19937 gen(5);
  auto A = RandomSparse(40, 60, 0.08, gen);
  auto B = RandomSparse(60, 30, 0.08, gen);
  const auto A0 = A;
  auto AI = Spgemm(A, CsrMatrix::Identity(60));
  CHECK(AI.I == A.I);
  CHECK(AI.J == A.J);
  CHECK(AI.A == A.A);
  auto C = Spgemm(A, B);
  C.Validate();
  const Eigen::MatrixXd ref = oracle::Dense(A) * oracle::Dense(B);
  const Eigen::MatrixXd pat = Pattern(A) * Pattern(B);
  CHECK((oracle::Dense(C) - ref).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK(Pattern(C) == pat.unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; }));
  CHECK(A.A == A0.A);
  CHECK(A.J == A0.J);
  // Associativity.
  auto D = RandomSparse(30, 20, 0.2, gen);
  auto L = Spgemm(Spgemm(A, B), D), R = Spgemm(A, Spgemm(B, D));
  CHECK(oracle::MaxDiff(L, R) <= 1e-12);
  // Cancellation keeps explicit zeros unless pruned.
  auto P = CsrMatrix::FromDense(1, 2, std::vector<double>{1, -1});
  auto Q = CsrMatrix::FromDense(2, 1, std::vector<double>{1, 1});
  auto Z = Spgemm(P, Q);
  CHECK(Z.Nnz() == 1);
  CHECK(Z.A[0] == 0.0);
  CHECK(Spgemm(P, Q, true).Nnz() == 0);
  CHECK_THROWS_AS(Spgemm(A, D), std::invalid_argument);
}

TEST_CASE("Triple products", "[sparse]")
{
  std::mt19937 gen(7);
  auto A = RandomSpd(30, 0.1, gen);
  auto RI = Rap(CsrMatrix::Identity(30), A);
  CHECK(oracle::MaxDiff(RI, A) <= 1e-15);
  auto one = Rap(CsrMatrix::FromDense(2, 1, std::vector<double>{1, 1}), CsrMatrix::Identity(2));
  CHECK(one.ToDense() == std::vector<double>{2.0});
  auto P = RandomSparse(30, 12, 0.15, gen);
  auto C = Rap(P, A);
  const Eigen::MatrixXd ref = oracle::Dense(P).transpose() * oracle::Dense(A) * oracle::Dense(P);
  CHECK((oracle::Dense(C) - ref).cwiseAbs().maxCoeff() <= 1e-13 * ref.cwiseAbs().maxCoeff());
  CHECK(SymmetryError(C) <= 1e-14 * MaxAbs(C));
  const Eigen::MatrixXd pat = Pattern(P).transpose() * Pattern(A) * Pattern(P);
  for (int i = 0; i < C.n_rows; i++)
  {
    for (int k = C.I[i]; k < C.I[i + 1]; k++)
    {
      CHECK(pat(i, C.J[k]) > 0.0);
    }
  }
  // Hanging-node constraint matrix applied to a LOR matrix.
  auto nc = RefineNonconforming(MakeCartesian(2, {2, 2, 1}, {{{0, 1}, {0, 1}, {0, 1}}}, 1), {3});
  auto s = BuildSpace(nc.leaf_mesh, SpaceKind::H1, 3);
  auto cons = BuildNcConstraints(nc, s);
  auto Ahat = AssembleLor(s, Form::Derivative(SpaceKind::H1, Coefficient::Constant(1.0)));
  auto Ah = Rap(cons.Lambda, Ahat);
  const Eigen::MatrixXd L = oracle::Dense(cons.Lambda);
  CHECK((oracle::Dense(Ah) - L.transpose() * oracle::Dense(Ahat) * L).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK_THROWS_AS(Rap(RandomSparse(29, 4, 0.5, gen), A), std::invalid_argument);
}

TEST_CASE("Sparse Cholesky", "[sparse]")
{
  {
    auto F = CholeskyFactorize(CsrMatrix::Identity(5));
    Vector b{1, -2, 3, 0.5, 7};
    CHECK(CholeskySolve(F, b) == b);
  }
  {
    const int n = 100;
    auto A = Poisson1D(n);
    Vector x(n);
    for (int i = 0; i < n; i++)
    {
      x[i] = std::sin(0.1 * i) + 0.01 * i;
    }
    auto b = Spmv(A, x);
    auto y = CholeskySolve(CholeskyFactorize(A), b);
    for (int i = 0; i < n; i++)
    {
      CHECK(std::abs(y[i] - x[i]) < 1e-11);
    }
  }
  std::mt19937 gen(9);
  for (int n : {50, 400, 2000})
  {
    auto A = RandomSpd(n, 3.0 / n, gen);
    auto F = CholeskyFactorize(A);
    REQUIRE(F.n == n);
    auto perm = F.perm;
    std::sort(perm.begin(), perm.end());
    for (int i = 0; i < n; i++)
    {
      REQUIRE(perm[i] == i);
      CHECK(F.iperm[F.perm[i]] == i);
    }
    Eigen::MatrixXd Ld = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; j++)
    {
      for (int k = F.Lp[j]; k < F.Lp[j + 1]; k++)
      {
        Ld(F.Li[k], j) = F.Lx[k];
      }
    }
    const Eigen::MatrixXd D = oracle::Dense(A);
    Eigen::MatrixXd PAP(n, n);
    for (int i = 0; i < n; i++)
    {
      for (int j = 0; j < n; j++)
      {
        PAP(i, j) = D(F.perm[i], F.perm[j]);
      }
    }
    CHECK((Ld * Ld.transpose() - PAP).norm() <= 1e-10 * PAP.norm());
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Vector b(n);
    for (auto &v : b)
    {
      v = U(gen);
    }
    auto x = CholeskySolve(F, b);
    auto r = Spmv(A, x);
    double rn = 0.0, bn = 0.0;
    for (int i = 0; i < n; i++)
    {
      rn += (r[i] - b[i]) * (r[i] - b[i]);
      bn += b[i] * b[i];
    }
    CHECK(std::sqrt(rn) <= 1e-12 * std::sqrt(bn));
  }
  auto Z = CsrMatrix::FromDense(3, 3, std::vector<double>{1, 0, 0, 0, 0, 0, 0, 0, 1});
  try
  {
    CholeskyFactorize(Z);
    FAIL("expected NotSpdError");
  }
  catch (const NotSpdError &e)
  {
    CHECK(e.Pivot() >= 0);
    CHECK(e.Pivot() < 3);
  }
  CHECK_THROWS_AS(CholeskyFactorize(CsrMatrix::FromDense(2, 2, std::vector<double>{1, 2, 2, 1})),
                  NotSpdError);
}

TEST_CASE("Lanczos extreme eigenvalues", "[sparse]")
{
  auto identity = [](std::span<const double> x, std::span<double> y)
  { std::copy(x.begin(), x.end(), y.begin()); };
  auto r = LanczosExtremes(identity, 20, 10);
  CHECK(std::abs(r.lambda_min - 1.0) < 1e-14);
  CHECK(std::abs(r.lambda_max - 1.0) < 1e-14);
  CHECK(r.breakdown);
  auto diag = [](std::span<const double> x, std::span<double> y)
  {
    for (std::size_t i = 0; i < x.size(); i++)
    {
      y[i] = (i + 1.0) * x[i];
    }
  };
  r = LanczosExtremes(diag, 10, 10);
  CHECK(std::abs(r.lambda_min - 1.0) < 1e-10);
  CHECK(std::abs(r.lambda_max - 10.0) < 1e-10);
  auto [lo, hi] = TridiagonalExtremes(std::vector<double>{2, 2, 2}, std::vector<double>{-1, -1});
  CHECK(std::abs(lo - (2.0 - std::sqrt(2.0))) < 1e-14);
  CHECK(std::abs(hi - (2.0 + std::sqrt(2.0))) < 1e-14);

  // LOR-preconditioned p=4 diffusion on a 4x4 mesh.
  auto m = MakeCartesian(2, {4, 4, 1}, {{{0, 1}, {0, 1}, {0, 1}}}, 1);
  auto s = BuildSpace(m, SpaceKind::H1, 4);
  auto form = Form::Derivative(SpaceKind::H1, Coefficient::Constant(1.0));
  auto ess = BoundaryDofs(s);
  EliminationData da, db;
  auto A = EliminateEssentialBcs(AssembleOracle(s, form, 6), ess, da);
  auto B = EliminateEssentialBcs(AssembleLor(s, form), ess, db);
  auto FB = CholeskyFactorize(B);
  auto M = [&](std::span<const double> x, std::span<double> y)
  {
    auto t = Spmv(A, x);
    CholeskySolve(FB, t, y);
  };
  auto gram = [&](std::span<const double> x, std::span<double> y) { Spmv(B, x, y); };
  const int n = A.n_rows;
  r = LanczosExtremes(M, n, n, gram);
  const auto ev = oracle::GeneralizedExtremes(oracle::Dense(A), oracle::Dense(B));
  CHECK(std::abs(r.lambda_min - ev.first) <= 1e-6 * ev.first);
  CHECK(std::abs(r.lambda_max - ev.second) <= 1e-6 * ev.second);
  CHECK(ev.second / ev.first > 1.0);
}

TEST_CASE("MatrixMarket round trip", "[sparse]")
{
  std::mt19937 gen(13);
  auto A = RandomSparse(17, 11, 0.2, gen);
  const auto path = (std::filesystem::temp_directory_path() / "lor_test_matrix.mtx").string();
  WriteMatrixMarket(A, path);
  auto B = ReadMatrixMarket(path);
  CHECK(B.n_rows == 17);
  CHECK(B.n_cols == 11);
  CHECK(B.I == A.I);
  CHECK(B.J == A.J);
  CHECK(B.A == A.A);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(ReadMatrixMarket(path), std::invalid_argument);
}
