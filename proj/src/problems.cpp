// SPDX-License-Identifier: Apache-2.0

#include "lor/problems.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <fmt/format.h>
#include "lor/amg.hpp"
#include "lor/discrete.hpp"
#include "lor/krylov.hpp"
#include "lor/lorasm.hpp"
#include "lor/pa.hpp"

namespace lor
{

namespace
{

using Clock = std::chrono::steady_clock;

double Since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename F>
auto InPhase(const char *phase, F &&body)
{
  try
  {
    return body();
  }
  catch (const PhaseError &)
  {
    throw;
  }
  catch (const std::exception &e)
  {
    throw PhaseError(phase, e.what());
  }
}

const std::array<std::array<double, 2>, 3> kUnitBox{{{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}}};

struct LinearProblem
{
  const FESpace *space = nullptr;
  Form form;
  const ConstraintMatrix *constraints = nullptr;
  std::vector<int> ess;  // true numbering, sorted
  Vector g;              // Dirichlet values on ess (true size); empty for homogeneous data
  Vector b;              // load vector (true size)
  Preconditioner precond = Preconditioner::LorAmg;
  double rel_tol = 1e-12, abs_tol = 0.0;
};

struct LinearSolution
{
  Vector x;
  RunResult stats;
};

LinearSolution SolveLinear(const RunConfig &cfg, int p, const LinearProblem &lp)
{
  const auto t_start = Clock::now();
  const FESpace &space = *lp.space;
  const int q = cfg.q > 0 ? cfg.q : p + 2;
  const int n = lp.constraints ? lp.constraints->NumTrue() : space.n_dofs;
  RunResult r;
  r.dim = space.dim;
  r.p = p;
  r.ndofs = n;

  // High-order operator and lifted right-hand side.
  auto t0 = Clock::now();
  PAOperator A(space, lp.form, q, cfg.open_basis);
  Vector gx(n, 0.0);
  Vector rhs = lp.b;
  InPhase("ho-setup",
          [&]
          {
            if (lp.constraints)
            {
              A.SetConstraints(lp.constraints);
            }
            if (!lp.g.empty())
            {
              for (int i : lp.ess)
              {
                gx[i] = lp.g[i];
              }
              const Vector Ag = A.Mult(gx);
              for (int i = 0; i < n; i++)
              {
                rhs[i] -= Ag[i];
              }
            }
            A.SetEssentialDofs(lp.ess);
            for (int i : lp.ess)
            {
              rhs[i] = 0.0;
            }
            return 0;
          });
  r.t_ho_setup = Since(t0);

  // Low-order-refined matrix.
  t0 = Clock::now();
  CsrMatrix L = InPhase("lor-assembly",
                        [&]
                        {
                          CsrMatrix Lhat = AssembleLor(space, lp.form);
                          if (lp.constraints)
                          {
                            Lhat = AssembleWithConstraints(Lhat, *lp.constraints);
                          }
                          r.nnz_per_row = static_cast<double>(Lhat.Nnz()) / std::max(1, Lhat.n_rows);
                          std::vector<char> is_ess(n, 0);
                          for (int i : lp.ess)
                          {
                            is_ess[i] = 1;
                          }
                          for (int i = 0; i < n; i++)
                          {
                            if (!is_ess[i])
                            {
                              r.max_interior_row_nnz = std::max(r.max_interior_row_nnz, Lhat.RowNnz(i));
                            }
                          }
                          EliminationData data;
                          return EliminateEssentialBcs(Lhat, lp.ess, data);
                        });
  r.nnz = L.Nnz();
  r.t_lor_asm = Since(t0);

  // Preconditioner setup.
  t0 = Clock::now();
  std::optional<AmgHierarchy> amg;
  std::optional<CholeskyFactor> chol;
  Vector inv_diag;
  InPhase("preconditioner-setup",
          [&]
          {
            switch (lp.precond)
            {
              case Preconditioner::LorAmg:
                amg.emplace(L);
                break;
              case Preconditioner::LorCholesky:
                chol.emplace(CholeskyFactorize(L));
                break;
              case Preconditioner::Jacobi:
                inv_diag = A.Diagonal();
                for (auto &d : inv_diag)
                {
                  d = 1.0 / d;
                }
                break;
              case Preconditioner::None:
                break;
            }
            return 0;
          });
  r.t_amg_setup = Since(t0);

  // Preconditioned conjugate gradient.
  LinearOperator Aop = [&](std::span<const double> x, std::span<double> y)
  {
    const auto ta = Clock::now();
    A.Mult(x, y);
    r.t_ho_apply += Since(ta);
  };
  LinearOperator Bop;
  if (lp.precond != Preconditioner::None)
  {
    Bop = [&](std::span<const double> x, std::span<double> y)
    {
      const auto tb = Clock::now();
      if (amg)
      {
        amg->Mult(x, y);
      }
      else if (chol)
      {
        CholeskySolve(*chol, x, y);
      }
      else
      {
        for (std::size_t i = 0; i < x.size(); i++)
        {
          y[i] = inv_diag[i] * x[i];
        }
      }
      r.t_prec_apply += Since(tb);
    };
  }
  Vector x(n, 0.0);
  PcgOptions opts;
  opts.rel_tol = lp.rel_tol;
  opts.abs_tol = lp.abs_tol;
  opts.max_iters = cfg.max_iters;
  const SolveStats st = InPhase("solve", [&] { return Pcg(Aop, Bop, rhs, x, opts); });
  for (int i = 0; i < n; i++)
  {
    x[i] += gx[i];
  }
  if (cfg.lanczos_iters > 0 && chol)
  {
    InPhase("spectral-estimate",
            [&]
            {
              std::vector<char> is_ess(n, 0);
              for (int i : lp.ess)
              {
                is_ess[i] = 1;
              }
              std::vector<int> free;
              for (int i = 0; i < n; i++)
              {
                if (!is_ess[i])
                {
                  free.push_back(i);
                }
              }
              const int nf = static_cast<int>(free.size());
              Vector xf(n, 0.0), yf(n), tf(n);
              auto scatter = [&](std::span<const double> u)
              {
                std::fill(xf.begin(), xf.end(), 0.0);
                for (int k = 0; k < nf; k++)
                {
                  xf[free[k]] = u[k];
                }
              };
              auto gather = [&](std::span<double> v)
              {
                for (int k = 0; k < nf; k++)
                {
                  v[k] = yf[free[k]];
                }
              };
              LinearOperator M = [&](std::span<const double> u, std::span<double> v)
              {
                scatter(u);
                A.Mult(xf, tf);
                CholeskySolve(*chol, tf, yf);
                gather(v);
              };
              LinearOperator gram = [&](std::span<const double> u, std::span<double> v)
              {
                scatter(u);
                Spmv(L, xf, yf);
                gather(v);
              };
              const auto lz = LanczosExtremes(M, nf, std::min(cfg.lanczos_iters, nf), gram);
              r.lanczos_kappa = std::max(1.0, lz.lambda_max / lz.lambda_min);
              return 0;
            });
  }
  r.iters = st.iterations;
  r.kappa_est = st.kappa_estimate;
  r.lambda_min = st.lambda_min;
  r.lambda_max = st.lambda_max;
  r.converged = st.converged;
  r.t_total = Since(t_start);
  return {std::move(x), r};
}

double ProductOfSines(const Point &x, int dim)
{
  double u = 1.0;
  for (int a = 0; a < dim; a++)
  {
    u *= std::sin(M_PI * x[a]);
  }
  return u;
}

void FinishTimes(const RunConfig &cfg, RunResult &r)
{
  if (cfg.deterministic)
  {
    r.t_ho_setup = r.t_lor_asm = r.t_amg_setup = r.t_ho_apply = r.t_prec_apply = r.t_total = 0.0;
  }
}

RunResult RunScalar(const RunConfig &cfg, int p)
{
  const int d = cfg.dim;
  const int q = cfg.q > 0 ? cfg.q : p + 2;
  const MacroMesh mesh = InPhase("mesh", [&] { return MakeCartesian(d, cfg.mesh, kUnitBox, 1); });
  const FESpace space = BuildSpace(mesh, SpaceKind::H1, p);
  const double shift = cfg.problem == Problem::Helmholtz ? 1.0 : 0.0;
  // Poisson: u = prod sin(pi x_a), an eigenfunction. Helmholtz: u = prod x_a (1 - x_a) e^{x_a},
  // which excites the whole spectrum.
  auto g = [](double t) { return t * (1.0 - t) * std::exp(t); };
  auto g2 = [](double t) { return -(t * t + 3.0 * t) * std::exp(t); };
  auto u = [d, shift, g](const Point &x)
  {
    if (shift == 0.0)
    {
      return ProductOfSines(x, d);
    }
    double v = 1.0;
    for (int a = 0; a < d; a++)
    {
      v *= g(x[a]);
    }
    return v;
  };
  auto force = [d, shift, g, g2, &u](const Point &x)
  {
    if (shift == 0.0)
    {
      return d * M_PI * M_PI * u(x);
    }
    double lap = 0.0;
    for (int a = 0; a < d; a++)
    {
      double t = g2(x[a]);
      for (int b = 0; b < d; b++)
      {
        t *= b == a ? 1.0 : g(x[b]);
      }
      lap += t;
    }
    return -lap + u(x);
  };
  LinearProblem lp;
  lp.space = &space;
  lp.form = shift > 0.0 ? Form::DerivativePlusMass(SpaceKind::H1, Coefficient::Constant(1.0),
                                                   Coefficient::Constant(1.0))
                        : Form::Derivative(SpaceKind::H1, Coefficient::Constant(1.0));
  lp.ess = BoundaryDofs(space);
  lp.b = AssembleRhs(space, ScalarFunction(force), q);
  lp.precond = cfg.precond;
  lp.rel_tol = cfg.rel_tol;
  lp.abs_tol = cfg.abs_tol;
  auto sol = SolveLinear(cfg, p, lp);
  sol.stats.problem = ProblemName(cfg.problem);
  sol.stats.l2_error = L2Error(space, sol.x, u, q);
  if (!cfg.vtk_path.empty())
  {
    WriteVtkLor(space, cfg.vtk_path, sol.x, "u");
  }
  FinishTimes(cfg, sol.stats);
  return sol.stats;
}

RunResult RunVector(const RunConfig &cfg, int p)
{
  const int d = cfg.dim;
  const int q = cfg.q > 0 ? cfg.q : p + 2;
  const SpaceKind kind = cfg.problem == Problem::CurlCurl ? SpaceKind::ND : SpaceKind::RT;
  const MacroMesh mesh = InPhase("mesh", [&] { return MakeCartesian(d, cfg.mesh, kUnitBox, 1); });
  const FESpace space = BuildSpace(mesh, kind, p);
  VectorFunction f;
  if (kind == SpaceKind::ND)
  {
    // E with vanishing tangential trace; curl curl E = c E.
    const double c = (d == 2 ? 1.0 : 2.0) * M_PI * M_PI + 1.0;
    f = [d, c](const Point &x)
    {
      const double sx = std::sin(M_PI * x[0]), sy = std::sin(M_PI * x[1]);
      if (d == 2)
      {
        return Point{c * sy, c * sx, 0.0};
      }
      const double sz = std::sin(M_PI * x[2]);
      return Point{c * sy * sz, c * sz * sx, c * sx * sy};
    };
  }
  else
  {
    // F with vanishing normal trace; -grad div F = pi^2 F.
    const double c = M_PI * M_PI + 1.0;
    f = [d, c](const Point &x)
    {
      Point y{0.0, 0.0, 0.0};
      for (int a = 0; a < d; a++)
      {
        y[a] = c * std::sin(M_PI * x[a]);
      }
      return y;
    };
  }
  LinearProblem lp;
  lp.space = &space;
  lp.form = Form::DerivativePlusMass(kind, Coefficient::Constant(1.0), Coefficient::Constant(1.0));
  lp.ess = BoundaryDofs(space);
  lp.b = AssembleRhs(space, f, q);
  lp.precond = cfg.precond;
  lp.rel_tol = cfg.rel_tol;
  lp.abs_tol = cfg.abs_tol;
  auto sol = SolveLinear(cfg, p, lp);
  sol.stats.problem = ProblemName(cfg.problem);
  FinishTimes(cfg, sol.stats);
  return sol.stats;
}

constexpr double kLayerAlpha = 20.0;
constexpr double kLayerRadius = 0.725;

double LayerSolution(const Point &x)
{
  const double r = std::hypot(x[0], x[1]);
  return std::atan(kLayerAlpha * (r - kLayerRadius));
}

double LayerForcing(const Point &x)
{
  const double r = std::max(std::hypot(x[0], x[1]), 1e-14);
  const double s = kLayerAlpha * (r - kLayerRadius);
  const double ur = kLayerAlpha / (1.0 + s * s);
  const double urr = -2.0 * kLayerAlpha * kLayerAlpha * s / ((1.0 + s * s) * (1.0 + s * s));
  return -(urr + ur / r);
}

RunResult RunAmrLayer(const RunConfig &cfg, int p)
{
  const int q = cfg.q > 0 ? cfg.q : p + 2;
  NcMesh2D nc = InPhase("mesh",
                        [&]
                        {
                          NcMesh2D m = MakeNcMesh(MakeCartesian(2, cfg.mesh, kUnitBox, 1));
                          for (int level = 0; level < cfg.amr_levels; level++)
                          {
                            std::set<int> marks;
                            for (int e = 0; e < m.leaf_mesh.n_el; e++)
                            {
                              const auto nodes = m.leaf_mesh.ElementNodes(e);
                              // Corners 0 and 3 are the nearest and farthest from the origin.
                              const double rmin = std::hypot(nodes[0], nodes[1]);
                              const double rmax = std::hypot(nodes[6], nodes[7]);
                              if (rmin < kLayerRadius && kLayerRadius < rmax)
                              {
                                marks.insert(e);
                              }
                            }
                            m = RefineNonconforming(m, marks);
                          }
                          return m;
                        });
  const FESpace space = BuildSpace(nc.leaf_mesh, SpaceKind::H1, p);
  const ConstraintMatrix cons = BuildNcConstraints(nc, space);
  const Vector b_full = AssembleRhs(space, ScalarFunction(LayerForcing), q);
  const Vector u_full = InterpolateH1(space, LayerSolution);
  LinearProblem lp;
  lp.space = &space;
  lp.form = Form::Derivative(SpaceKind::H1, Coefficient::Constant(1.0));
  lp.constraints = &cons;
  lp.ess = RestrictToTrue(cons, BoundaryDofs(space));
  lp.b = SpmvTranspose(cons.Lambda, b_full);
  lp.g.assign(cons.NumTrue(), 0.0);
  for (int t = 0; t < cons.NumTrue(); t++)
  {
    lp.g[t] = u_full[cons.true_to_full[t]];
  }
  lp.precond = cfg.precond;
  lp.rel_tol = cfg.rel_tol;
  lp.abs_tol = cfg.abs_tol;
  auto sol = SolveLinear(cfg, p, lp);
  sol.stats.problem = ProblemName(cfg.problem);
  const Vector x_full = Spmv(cons.Lambda, sol.x);
  sol.stats.l2_error = L2Error(space, x_full, LayerSolution, q);
  if (!cfg.vtk_path.empty())
  {
    WriteVtkLor(space, cfg.vtk_path, x_full, "u");
  }
  FinishTimes(cfg, sol.stats);
  return sol.stats;
}

constexpr double kCoilHalfWidth = 0.25;
constexpr double kAirConductivity = 1e-6;

std::vector<RunResult> RunMagDiff(const RunConfig &cfg, int p)
{
  const int q = cfg.q > 0 ? cfg.q : p + 2;
  MacroMesh mesh = InPhase("mesh",
                           [&]
                           {
                             return MakeCartesian(3, cfg.mesh,
                                                  {{{-0.5, 0.5}, {-0.5, 0.5}, {-0.75, 0.75}}}, 1);
                           });
  // Attribute 1: coil, a square bar |x|, |y| <= 1/4 joining the two z faces. Attribute 2: air.
  for (int e = 0; e < mesh.n_el; e++)
  {
    const auto nodes = mesh.ElementNodes(e);
    Point c{0.0, 0.0, 0.0};
    for (int v = 0; v < 8; v++)
    {
      for (int a = 0; a < 3; a++)
      {
        c[a] += nodes[v * 3 + a] / 8.0;
      }
    }
    mesh.attributes[e] = (std::abs(c[0]) < kCoilHalfWidth && std::abs(c[1]) < kCoilHalfWidth) ? 1 : 2;
  }
  const Coefficient beta = Coefficient::ByAttribute({1.0, kAirConductivity});
  const FESpace h1 = BuildSpace(mesh, SpaceKind::H1, p);
  const FESpace nd = BuildSpace(mesh, SpaceKind::ND, p);
  const FESpace rt = BuildSpace(mesh, SpaceKind::RT, p);

  // Electric potential: phi = 0 and 1 on the coil terminals (its z faces), insulated elsewhere.
  const auto X = LorVertexCoordinates(h1);
  LinearProblem phi;
  phi.space = &h1;
  phi.form = Form::Derivative(SpaceKind::H1, beta);
  phi.g.assign(h1.n_dofs, 0.0);
  for (int attr : {5, 6})
  {
    for (int i : BoundaryDofs(h1, {attr}))
    {
      if (std::abs(X[0][i]) <= kCoilHalfWidth + 1e-12 && std::abs(X[1][i]) <= kCoilHalfWidth + 1e-12)
      {
        phi.ess.push_back(i);
        phi.g[i] = attr == 5 ? 0.0 : 1.0;
      }
    }
  }
  std::sort(phi.ess.begin(), phi.ess.end());
  phi.b.assign(h1.n_dofs, 0.0);
  phi.precond = cfg.precond;
  phi.rel_tol = cfg.rel_tol;
  phi.abs_tol = cfg.abs_tol;
  auto sphi = SolveLinear(cfg, p, phi);
  sphi.stats.problem = "magdiff-phi";

  // Vector potential: curl curl A + beta A = -beta grad phi, n x A = 0.
  const auto t0 = Clock::now();
  const CsrMatrix G = DiscreteGradient(h1, nd);
  const CsrMatrix C = DiscreteCurl3D(nd, rt);
  const Vector grad_phi = Spmv(G, sphi.x);
  PAOperator mass(nd, Form::Mass(beta), q);
  Vector rhs = mass.Mult(grad_phi);
  for (auto &v : rhs)
  {
    v = -v;
  }
  const double t_rhs = Since(t0);
  LinearProblem avec;
  avec.space = &nd;
  avec.form = Form::DerivativePlusMass(SpaceKind::ND, Coefficient::Constant(1.0), beta);
  avec.ess = BoundaryDofs(nd);
  avec.b = std::move(rhs);
  // Classical AMG is not suited to the curl-curl kernel; the exact LOR factorization is used.
  avec.precond = cfg.precond == Preconditioner::LorAmg ? Preconditioner::LorCholesky : cfg.precond;
  avec.rel_tol = cfg.rel_tol;
  avec.abs_tol = cfg.abs_tol;
  auto sa = SolveLinear(cfg, p, avec);
  sa.stats.problem = "magdiff-A";
  sa.stats.t_ho_setup += t_rhs;
  sa.stats.t_total += t_rhs;

  // Magnetic field in H(div) and the discrete complex checks.
  const Vector B = Spmv(C, sa.x);
  const CsrMatrix CG = Spgemm(C, G);
  double cg_res = 0.0;
  for (double v : Spmv(CG, sphi.x))
  {
    cg_res = std::max(cg_res, std::abs(v));
  }
  double bmax = 0.0, imbalance = 0.0;
  for (double v : B)
  {
    bmax = std::max(bmax, std::abs(v));
  }
  const int nsub = IPow(p, 3);
  for (int e = 0; e < mesh.n_el; e++)
  {
    for (int s = 0; s < nsub; s++)
    {
      const auto faces = SubelementDofs(SpaceKind::RT, p, 3, s);
      double div = 0.0;
      for (int m = 0; m < 6; m++)
      {
        const int slot = e * rt.ndof_per_el + faces[m];
        const double outward = (m % 2 == 0) ? -1.0 : 1.0;
        div += outward * rt.restriction.signs[slot] * B[rt.restriction.element_map[slot]];
      }
      imbalance = std::max(imbalance, std::abs(div));
    }
  }
  for (auto *r : {&sphi.stats, &sa.stats})
  {
    r->complex_residual = cg_res;
    r->flux_imbalance = bmax > 0.0 ? imbalance / bmax : 0.0;
    FinishTimes(cfg, *r);
  }
  return {sphi.stats, sa.stats};
}

std::vector<std::string> SplitCsv(const std::string &line)
{
  std::vector<std::string> out;
  std::string cur;
  for (char c : line)
  {
    if (c == ',')
    {
      out.push_back(cur);
      cur.clear();
    }
    else if (c != '\r')
    {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

template <typename T>
T ParseNumber(const std::string &s, int line, const char *field)
{
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
  {
    throw CsvParseError(line, fmt::format("invalid {} value '{}'", field, s));
  }
  return value;
}

}  // namespace

Problem ParseProblem(const std::string &name)
{
  for (auto p : {Problem::Poisson, Problem::Helmholtz, Problem::CurlCurl, Problem::DivDiv,
                 Problem::AmrLayer, Problem::MagDiff})
  {
    if (name == ProblemName(p))
    {
      return p;
    }
  }
  throw std::invalid_argument("unknown problem '" + name + "'");
}

const char *ProblemName(Problem p)
{
  switch (p)
  {
    case Problem::Poisson:
      return "poisson";
    case Problem::Helmholtz:
      return "helmholtz";
    case Problem::CurlCurl:
      return "curlcurl";
    case Problem::DivDiv:
      return "divdiv";
    case Problem::AmrLayer:
      return "amr-layer";
    case Problem::MagDiff:
      return "magdiff";
  }
  return "?";
}

Preconditioner ParsePreconditioner(const std::string &name)
{
  for (auto p : {Preconditioner::LorAmg, Preconditioner::LorCholesky, Preconditioner::Jacobi,
                 Preconditioner::None})
  {
    if (name == PreconditionerName(p))
    {
      return p;
    }
  }
  throw std::invalid_argument("unknown preconditioner '" + name + "'");
}

const char *PreconditionerName(Preconditioner p)
{
  switch (p)
  {
    case Preconditioner::LorAmg:
      return "lor-amg";
    case Preconditioner::LorCholesky:
      return "lor-cholesky";
    case Preconditioner::Jacobi:
      return "jacobi";
    case Preconditioner::None:
      return "none";
  }
  return "?";
}

void RunConfig::Validate() const
{
  Require(dim == 2 || dim == 3, "RunConfig: dim must be 2 or 3");
  for (int a = 0; a < dim; a++)
  {
    Require(mesh[a] >= 1, "RunConfig: mesh extents must be >= 1");
  }
  Require(p_min >= 1 && p_max >= p_min, "RunConfig: invalid polynomial degree range");
  Require(rel_tol > 0.0 || abs_tol > 0.0, "RunConfig: tolerance must be positive");
  Require(rel_tol >= 0.0 && abs_tol >= 0.0, "RunConfig: tolerances must be non-negative");
  Require(max_iters >= 1, "RunConfig: max_iters must be >= 1");
  Require(q >= 0, "RunConfig: q must be >= 0");
  Require(threads >= 0, "RunConfig: threads must be >= 0");
  Require(amr_levels >= 0, "RunConfig: amr_levels must be >= 0");
  if (problem == Problem::AmrLayer)
  {
    Require(dim == 2, "RunConfig: amr-layer is 2D only");
  }
  if (problem == Problem::MagDiff)
  {
    Require(dim == 3, "RunConfig: magdiff is 3D only");
  }
}

std::vector<RunResult> RunProblem(const RunConfig &cfg, int p)
{
  cfg.Validate();
  if (cfg.threads > 0)
  {
    SetNumThreads(cfg.threads);
  }
  switch (cfg.problem)
  {
    case Problem::Poisson:
    case Problem::Helmholtz:
      return {RunScalar(cfg, p)};
    case Problem::CurlCurl:
    case Problem::DivDiv:
      return {RunVector(cfg, p)};
    case Problem::AmrLayer:
      return {RunAmrLayer(cfg, p)};
    case Problem::MagDiff:
      return RunMagDiff(cfg, p);
  }
  return {};
}

std::vector<RunResult> RunSweep(const RunConfig &cfg)
{
  std::vector<RunResult> all;
  for (int p = cfg.p_min; p <= cfg.p_max; p++)
  {
    for (auto &r : RunProblem(cfg, p))
    {
      all.push_back(std::move(r));
    }
  }
  return all;
}

const char *const kCsvHeader =
    "problem,dim,p,ndofs,nnz,iters,kappa_est,t_ho_setup,t_lor_asm,t_amg_setup,t_ho_apply,"
    "t_prec_apply,t_total,converged";

std::string CsvRow(const RunResult &r)
{
  return fmt::format("{},{},{},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}",
                     r.problem, r.dim, r.p, r.ndofs, r.nnz, r.iters, r.kappa_est, r.t_ho_setup,
                     r.t_lor_asm, r.t_amg_setup, r.t_ho_apply, r.t_prec_apply, r.t_total,
                     r.converged ? 1 : 0);
}

void WriteCsv(std::ostream &out, const std::vector<RunResult> &rows)
{
  out << kCsvHeader << "\n";
  for (const auto &r : rows)
  {
    out << CsvRow(r) << "\n";
  }
}

std::vector<ReportRow> ParseResultsCsv(std::istream &in)
{
  std::vector<ReportRow> rows;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line))
  {
    lineno++;
    if (!line.empty() && line.back() == '\r')
    {
      line.pop_back();
    }
    if (line.empty())
    {
      continue;
    }
    if (!header)
    {
      if (line != kCsvHeader)
      {
        throw CsvParseError(lineno, "unexpected header");
      }
      header = true;
      continue;
    }
    const auto f = SplitCsv(line);
    if (f.size() != 14)
    {
      throw CsvParseError(lineno, fmt::format("expected 14 fields, found {}", f.size()));
    }
    ReportRow row;
    RunResult &r = row.run;
    r.problem = f[0];
    r.dim = ParseNumber<int>(f[1], lineno, "dim");
    r.p = ParseNumber<int>(f[2], lineno, "p");
    r.ndofs = ParseNumber<long>(f[3], lineno, "ndofs");
    r.nnz = ParseNumber<long>(f[4], lineno, "nnz");
    r.iters = ParseNumber<int>(f[5], lineno, "iters");
    r.kappa_est = ParseNumber<double>(f[6], lineno, "kappa_est");
    r.t_ho_setup = ParseNumber<double>(f[7], lineno, "t_ho_setup");
    r.t_lor_asm = ParseNumber<double>(f[8], lineno, "t_lor_asm");
    r.t_amg_setup = ParseNumber<double>(f[9], lineno, "t_amg_setup");
    r.t_ho_apply = ParseNumber<double>(f[10], lineno, "t_ho_apply");
    r.t_prec_apply = ParseNumber<double>(f[11], lineno, "t_prec_apply");
    r.t_total = ParseNumber<double>(f[12], lineno, "t_total");
    const int conv = ParseNumber<int>(f[13], lineno, "converged");
    if (conv != 0 && conv != 1)
    {
      throw CsvParseError(lineno, "converged must be 0 or 1");
    }
    r.converged = conv == 1;
    const double parts[5] = {r.t_ho_setup, r.t_lor_asm, r.t_amg_setup, r.t_ho_apply, r.t_prec_apply};
    for (double t : parts)
    {
      if (t < 0.0)
      {
        throw CsvParseError(lineno, "negative phase time");
      }
    }
    if (r.t_total > 0.0)
    {
      row.f_ho_setup = r.t_ho_setup / r.t_total;
      row.f_lor_asm = r.t_lor_asm / r.t_total;
      row.f_amg_setup = r.t_amg_setup / r.t_total;
      row.f_ho_apply = r.t_ho_apply / r.t_total;
      row.f_prec_apply = r.t_prec_apply / r.t_total;
      row.f_other = std::max(0.0, 1.0 - (row.f_ho_setup + row.f_lor_asm + row.f_amg_setup +
                                         row.f_ho_apply + row.f_prec_apply));
    }
    else
    {
      row.f_other = 1.0;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void EmitReport(const std::vector<ReportRow> &rows, std::ostream &text, std::ostream *csv)
{
  if (csv)
  {
    *csv << "problem,dim,p,f_ho_setup,f_lor_asm,f_amg_setup,f_ho_apply,f_prec_apply,f_other\n";
  }
  if (rows.empty())
  {
    return;
  }
  text << fmt::format("{:<12} {:>3} {:>3} {:>10} {:>6} {:>9} | {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
                      "problem", "dim", "p", "ndofs", "iters", "kappa", "ho-setup", "lor-asm",
                      "amg-set", "ho-apply", "prec-app", "other");
  for (const auto &row : rows)
  {
    const auto &r = row.run;
    text << fmt::format(
        "{:<12} {:>3} {:>3} {:>10} {:>6} {:>9.4f} | {:>7.1f}% {:>7.1f}% {:>7.1f}% {:>7.1f}% "
        "{:>7.1f}% {:>7.1f}%\n",
        r.problem, r.dim, r.p, r.ndofs, r.iters, r.kappa_est, 100 * row.f_ho_setup,
        100 * row.f_lor_asm, 100 * row.f_amg_setup, 100 * row.f_ho_apply, 100 * row.f_prec_apply,
        100 * row.f_other);
    if (csv)
    {
      *csv << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.problem,
                          r.dim, r.p, row.f_ho_setup, row.f_lor_asm, row.f_amg_setup,
                          row.f_ho_apply, row.f_prec_apply, row.f_other);
    }
  }
}

}  // namespace lor
