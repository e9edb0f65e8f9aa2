// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>
#include <cmath>
#include <random>
#include "lor/krylov.hpp"
#include "lor/lorasm.hpp"
#include "lor/pa.hpp"

using namespace lor;

namespace
{

LinearOperator AsOperator(const CsrMatrix &A)
{
  return [&A](std::span<const double> x, std::span<double> y) { Spmv(A, x, y); };
}

CsrMatrix RandomSpd(int n, std::mt19937 &gen)
{
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<int> r, c;
  std::vector<double> v;
  for (int i = 0; i < n; i++)
  {
    for (int k = 0; k < 3; k++)
    {
      r.push_back(i);
      c.push_back(static_cast<int>(gen() % n));
      v.push_back(U(gen));
    }
  }
  auto B = CsrMatrix::FromTriplets(n, n, r, c, v);
  return Add(Spgemm(Transpose(B), B), CsrMatrix::Identity(n), 1.0, 0.1);
}

Vector Random(int n, std::mt19937 &gen)
{
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Vector v(n);
  for (auto &t : v)
  {
    t = U(gen);
  }
  return v;
}

// Iterations of LOR-preconditioned CG for the positive definite Helmholtz problem.
int HelmholtzIterations(int p)
{
  auto m = MakeCartesian(2, {8, 8, 1}, {{{0, 1}, {0, 1}, {0, 1}}}, 1);
  auto s = BuildSpace(m, SpaceKind::H1, p);
  auto form = Form::DerivativePlusMass(SpaceKind::H1, Coefficient::Constant(1.0),
                                       Coefficient::Constant(1.0));
  auto ess = BoundaryDofs(s);
  PAOperator A(s, form, p + 2);
  A.SetEssentialDofs(ess);
  EliminationData data;
  auto L = EliminateEssentialBcs(AssembleLor(s, form), ess, data);
  auto F = CholeskyFactorize(L);
  auto b = AssembleRhs(s, ScalarFunction([](const Point &x) { return 1.0 + x[0]; }), p + 2);
  for (int i : ess)
  {
    b[i] = 0.0;
  }
  Vector x(s.n_dofs, 0.0);
  auto stats = Pcg([&](std::span<const double> u, std::span<double> v) { A.Mult(u, v); },
                   [&](std::span<const double> u, std::span<double> v) { CholeskySolve(F, u, v); },
                   b, x);
  REQUIRE(stats.converged);
  return stats.iterations;
}

}  // namespace

TEST_CASE("PCG on small systems", "[krylov]")
{
  {
    auto I = CsrMatrix::Identity(5);
    Vector b{1, 2, 3, 4, 5}, x(5, 0.0);
    auto st = Pcg(AsOperator(I), AsOperator(I), b, x);
    CHECK(st.converged);
    CHECK(st.iterations == 1);
    CHECK(st.kappa_estimate == 1.0);
    CHECK(x == b);
  }
  {
    auto A = CsrMatrix::FromDense(2, 2, std::vector<double>{1, 0, 0, 4});
    std::mt19937 gen(4);
    auto b = Random(2, gen);
    Vector x(2, 0.0);
    auto st = Pcg(AsOperator(A), nullptr, b, x);
    CHECK(st.converged);
    CHECK(st.iterations <= 2);
    CHECK(std::abs(st.kappa_estimate - 4.0) < 1e-10);
    CHECK(std::abs(st.lambda_min - 1.0) < 1e-10);
    CHECK(std::abs(st.lambda_max - 4.0) < 1e-10);
    CHECK(std::abs(x[0] - b[0]) < 1e-14);
    CHECK(std::abs(x[1] - 0.25 * b[1]) < 1e-14);
  }
  {
    // Zero right-hand side: already converged.
    auto A = CsrMatrix::Identity(3);
    Vector b(3, 0.0), x(3, 0.0);
    auto st = Pcg(AsOperator(A), nullptr, b, x);
    CHECK(st.converged);
    CHECK(st.iterations == 0);
    CHECK(st.kappa_estimate == 1.0);
  }
}

TEST_CASE("PCG with an exact preconditioner", "[krylov]")
{
  std::mt19937 gen(8);
  for (int n : {10, 200, 1000})
  {
    auto A = RandomSpd(n, gen);
    auto F = CholeskyFactorize(A);
    auto b = Random(n, gen);
    Vector x(n, 0.0);
    auto st = Pcg(AsOperator(A), [&](std::span<const double> u, std::span<double> v)
                  { CholeskySolve(F, u, v); }, b, x);
    CHECK(st.converged);
    CHECK(st.iterations == 1);
    CHECK(st.residual_history.back() <= 1e-12 * st.residual_history.front());
  }
}

TEST_CASE("Condition number estimates", "[krylov]")
{
  std::mt19937 gen(21);
  const int n = 300;
  auto A = RandomSpd(n, gen);
  Vector dinv(n);
  for (int i = 0; i < n; i++)
  {
    dinv[i] = 1.0 / A.Get(i, i);
  }
  auto jacobi = [&](std::span<const double> u, std::span<double> v)
  {
    for (int i = 0; i < n; i++)
    {
      v[i] = dinv[i] * u[i];
    }
  };
  auto b = Random(n, gen);
  Vector x(n, 0.0);
  PcgOptions opts;
  opts.rel_tol = 1e-10;
  auto st = Pcg(AsOperator(A), jacobi, b, x, opts);
  REQUIRE(st.converged);
  CHECK(st.kappa_estimate >= 1.0);
  CHECK(st.residual_history.back() <= opts.rel_tol * st.residual_history.front());
  CHECK(static_cast<int>(st.residual_history.size()) == st.iterations + 1);
  CHECK(static_cast<int>(st.cg_alphas.size()) == st.iterations);
  double prev = 1.0;
  for (int k = 1; k <= st.iterations; k++)
  {
    auto [lo, hi] = CgRitzExtremes(std::span<const double>(st.cg_alphas.data(), k),
                                   std::span<const double>(st.cg_betas.data(), k - 1));
    const double kappa = std::max(1.0, hi / lo);
    CHECK(kappa >= prev * (1.0 - 1e-10));
    prev = kappa;
  }
  CHECK(std::abs(prev - st.kappa_estimate) <= 1e-12 * prev);
  // Deterministic repeat.
  Vector y(n, 0.0);
  auto st2 = Pcg(AsOperator(A), jacobi, b, y, opts);
  CHECK(y == x);
  CHECK(st2.residual_history == st.residual_history);
}

TEST_CASE("PCG stopping and errors", "[krylov]")
{
  std::mt19937 gen(2);
  const int n = 100;
  auto A = RandomSpd(n, gen);
  auto b = Random(n, gen);
  {
    Vector x(n, 0.0);
    PcgOptions opts;
    opts.max_iters = 3;
    auto st = Pcg(AsOperator(A), nullptr, b, x, opts);
    CHECK_FALSE(st.converged);
    CHECK(st.iterations == 3);
  }
  {
    Vector x(n, 0.0);
    PcgOptions opts;
    opts.rel_tol = 0.0;
    opts.abs_tol = 1e-3;
    auto st = Pcg(AsOperator(A), nullptr, b, x, opts);
    CHECK(st.converged);
    CHECK(st.residual_history.back() <= 1e-3);
    CHECK(st.residual_history[st.residual_history.size() - 2] > 1e-3);
  }
  Vector x(n, 0.0);
  auto negative = [](std::span<const double> u, std::span<double> v)
  {
    for (std::size_t i = 0; i < u.size(); i++)
    {
      v[i] = -u[i];
    }
  };
  CHECK_THROWS_AS(Pcg(AsOperator(A), negative, b, x), IndefinitePreconditionerError);
  Vector short_x(n - 1);
  CHECK_THROWS_AS(Pcg(AsOperator(A), nullptr, b, short_x), std::invalid_argument);
}

TEST_CASE("LOR-preconditioned Helmholtz iterations are independent of p", "[krylov]")
{
  const int it2 = HelmholtzIterations(2);
  const int it6 = HelmholtzIterations(6);
  INFO("p=2: " << it2 << " iterations, p=6: " << it6);
  CHECK(std::abs(it6 - it2) <= 3);
}
