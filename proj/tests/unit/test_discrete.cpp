// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include "lor/discrete.hpp"
#include "oracles.hpp"

using namespace lor;

namespace
{

const std::array<std::array<double, 2>, 3> kUnit{{{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}}};

MacroMesh Curved(int dim, std::array<int, 3> n, int pg)
{
  return CurveMesh(MakeCartesian(dim, n, kUnit, pg),
                   [](const Point &x)
                   {
                     return Point{x[0] + 0.05 * std::sin(M_PI * x[0]) * x[1],
                                  x[1] + 0.04 * x[0] * x[0], x[2] + 0.03 * x[0] * x[1]};
                   });
}

// Global DOF of the local slot with doubled lattice position dbl in element e.
int GlobalAt(const FESpace &s, int e, int comp, const std::array<int, 3> &dbl)
{
  const int l = LocalDofIndex(s.kind, s.dim, s.p, comp, dbl);
  return s.restriction.element_map[e * s.ndof_per_el + l];
}

void CheckIncidence(const CsrMatrix &M, int row_nnz)
{
  M.Validate();
  for (int i = 0; i < M.n_rows; i++)
  {
    CHECK(M.RowNnz(i) == row_nnz);
  }
  for (double v : M.A)
  {
    CHECK((v == 1.0 || v == -1.0));
  }
}

}  // namespace

TEST_CASE("Reference incidence tables", "[discrete]")
{
  for (int dim = 2; dim <= 3; dim++)
  {
    for (int p = 1; p <= 4; p++)
    {
      auto t = BuildTopoOpTables(dim, p);
      const auto h1 = LocalDofs(SpaceKind::H1, dim, p);
      const auto nd = LocalDofs(SpaceKind::ND, dim, p);
      REQUIRE(t.edge_to_vertex.size() == 2 * nd.size());
      for (std::size_t i = 0; i < nd.size(); i++)
      {
        const auto &a = h1[t.edge_to_vertex[2 * i]].dbl;
        const auto &b = h1[t.edge_to_vertex[2 * i + 1]].dbl;
        int diff_axes = 0;
        for (int c = 0; c < dim; c++)
        {
          if (a[c] != b[c])
          {
            diff_axes++;
            CHECK(c == nd[i].comp);
            CHECK(b[c] - a[c] == 2);  // one lattice step along +axis
          }
        }
        CHECK(diff_axes == 1);
      }
      if (dim == 3)
      {
        const auto rt = LocalDofs(SpaceKind::RT, dim, p);
        REQUIRE(t.face_to_edge.size() == 4 * rt.size());
        for (std::size_t f = 0; f < rt.size(); f++)
        {
          // Edges bounding the face lie in its plane, adjacent to its center.
          int sum = 0;
          for (int k = 0; k < 4; k++)
          {
            const auto &e = nd[t.face_to_edge[4 * f + k]];
            CHECK(e.comp != rt[f].comp);
            CHECK(e.dbl[rt[f].comp] == rt[f].dbl[rt[f].comp]);
            int dist = 0;
            for (int c = 0; c < 3; c++)
            {
              dist += std::abs(e.dbl[c] - rt[f].dbl[c]);
            }
            CHECK(dist == 1);
            sum += t.face_sign[4 * f + k];
          }
          CHECK(sum == 0);
        }
      }
    }
  }
}

TEST_CASE("Discrete gradient", "[discrete]")
{
  {
    auto m = MakeCartesian(2, {1, 1, 1}, kUnit, 1);
    auto h1 = BuildSpace(m, SpaceKind::H1, 2);
    auto nd = BuildSpace(m, SpaceKind::ND, 2);
    auto G = DiscreteGradient(h1, nd);
    const int row = GlobalAt(nd, 0, 0, {1, 0, 0});
    CHECK(G.RowNnz(row) == 2);
    CHECK(G.Get(row, GlobalAt(h1, 0, 0, {0, 0, 0})) == -1.0);
    CHECK(G.Get(row, GlobalAt(h1, 0, 0, {2, 0, 0})) == 1.0);
  }
  std::vector<MacroMesh> meshes{MakeCartesian(2, {3, 2, 1}, kUnit, 1), Curved(2, {2, 3, 1}, 2),
                                MakeCartesian(3, {2, 2, 2}, kUnit, 1), Curved(3, {2, 1, 2}, 2)};
  meshes.push_back(RenumberVertices(meshes[0], std::vector<int>{11, 0, 7, 3, 9, 1, 5, 10, 2, 8, 4, 6}));
  for (const auto &m : meshes)
  {
    for (int p = 1; p <= 4; p++)
    {
      auto h1 = BuildSpace(m, SpaceKind::H1, p);
      auto nd = BuildSpace(m, SpaceKind::ND, p);
      auto G = DiscreteGradient(h1, nd);
      REQUIRE(G.n_rows == nd.n_dofs);
      REQUIRE(G.n_cols == h1.n_dofs);
      CheckIncidence(G, 2);
      for (double v : Spmv(G, Vector(h1.n_dofs, 1.0)))
      {
        CHECK(v == 0.0);
      }
      // Signed subedge extents from the geometry.
      const auto X = LorVertexCoordinates(h1);
      const auto gl = GaussLobatto(p).points;
      const auto locals = LocalDofs(SpaceKind::ND, m.dim, p);
      for (int c = 0; c < m.dim; c++)
      {
        const auto Gx = Spmv(G, X[c]);
        for (int e = 0; e < m.n_el; e++)
        {
          for (int l = 0; l < nd.ndof_per_el; l++)
          {
            const int slot = e * nd.ndof_per_el + l;
            const auto &ld = locals[l];
            Point xi0{0, 0, 0}, xi1{0, 0, 0};
            for (int a = 0; a < m.dim; a++)
            {
              xi0[a] = gl[a == ld.comp ? (ld.dbl[a] - 1) / 2 : ld.dbl[a] / 2];
              xi1[a] = gl[a == ld.comp ? (ld.dbl[a] + 1) / 2 : ld.dbl[a] / 2];
            }
            Point x0, x1;
            std::array<double, 9> J;
            EvalElementMap(m, e, xi0, x0, J);
            EvalElementMap(m, e, xi1, x1, J);
            const double expect = nd.restriction.signs[slot] * (x1[c] - x0[c]);
            CHECK(std::abs(Gx[nd.restriction.element_map[slot]] - expect) < 1e-13);
          }
        }
      }
    }
  }
  auto m = MakeCartesian(2, {2, 2, 1}, kUnit, 1);
  CHECK_THROWS_AS(DiscreteGradient(BuildSpace(m, SpaceKind::H1, 2), BuildSpace(m, SpaceKind::ND, 3)),
                  std::invalid_argument);
  auto other = MakeCartesian(2, {2, 2, 1}, kUnit, 1);
  CHECK_THROWS_AS(DiscreteGradient(BuildSpace(m, SpaceKind::H1, 2), BuildSpace(other, SpaceKind::ND, 2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(DiscreteGradient(BuildSpace(m, SpaceKind::ND, 2), BuildSpace(m, SpaceKind::ND, 2)),
                  std::invalid_argument);
}

TEST_CASE("Gradient commutes with the interpolation-histopolation basis", "[discrete]")
{
  std::mt19937 gen(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int dim = 2; dim <= 3; dim++)
  {
    const auto m = Curved(dim, {2, 2, 2}, 2);
    for (int p = 1; p <= 4; p++)
    {
      auto h1 = BuildSpace(m, SpaceKind::H1, p);
      auto nd = BuildSpace(m, SpaceKind::ND, p);
      auto G = DiscreteGradient(h1, nd);
      Vector u(h1.n_dofs);
      for (auto &v : u)
      {
        v = U(gen);
      }
      const auto Gu = Spmv(G, u);
      const auto ue = RestrictionApply(h1.restriction, u);
      const auto gl = GaussLobatto(p).points;
      const auto gauss = GaussLegendre(p + 1);
      const auto locals = LocalDofs(SpaceKind::ND, dim, p);
      const int nh = IPow(p + 1, dim);
      double err = 0.0;
      for (int e = 0; e < m.n_el; e++)
      {
        for (int l = 0; l < nd.ndof_per_el; l++)
        {
          const auto &ld = locals[l];
          const int a = ld.comp;
          const int i = (ld.dbl[a] - 1) / 2;
          // Line integral of d u_h / d xi_a over [x_i, x_{i+1}] by Gauss quadrature.
          std::vector<double> pts(gauss.points.size());
          for (std::size_t q = 0; q < pts.size(); q++)
          {
            pts[q] = gl[i] + 0.5 * (gauss.points[q] + 1.0) * (gl[i + 1] - gl[i]);
          }
          DenseMatrix B, D;
          LagrangeMatrices(gl, pts, B, D);
          double integral = 0.0;
          for (int j = 0; j <= p; j++)
          {
            std::array<int, 3> idx{ld.dbl[0] / 2, ld.dbl[1] / 2, ld.dbl[2] / 2};
            idx[a] = j;
            int lex = 0, stride = 1;
            for (int c = 0; c < dim; c++)
            {
              lex += idx[c] * stride;
              stride *= p + 1;
            }
            double w = 0.0;
            for (std::size_t q = 0; q < pts.size(); q++)
            {
              w += gauss.weights[q] * 0.5 * (gl[i + 1] - gl[i]) * D(static_cast<int>(q), j);
            }
            integral += w * ue[static_cast<std::size_t>(e) * nh + lex];
          }
          const int slot = e * nd.ndof_per_el + l;
          const double global = nd.restriction.signs[slot] * integral;
          err = std::max(err, std::abs(Gu[nd.restriction.element_map[slot]] - global));
        }
      }
      INFO("dim " << dim << " p " << p);
      CHECK(err < 1e-11);
    }
  }
}

TEST_CASE("Rotated gradient", "[discrete]")
{
  for (int p = 1; p <= 4; p++)
  {
    auto m = Curved(2, {3, 2, 1}, 2);
    auto h1 = BuildSpace(m, SpaceKind::H1, p);
    auto rt = BuildSpace(m, SpaceKind::RT, p);
    auto R = RotatedGradient2D(h1, rt);
    REQUIRE(R.n_rows == rt.n_dofs);
    CheckIncidence(R, 2);
    for (double v : Spmv(R, Vector(h1.n_dofs, 1.0)))
    {
      CHECK(v == 0.0);
    }
  }
  // Brute-force incidence on one element: the normal component along x of (-d/dy, d/dx) u
  // is the y-difference across the face, negated; along y it is the x-difference.
  auto m = MakeCartesian(2, {1, 1, 1}, kUnit, 1);
  auto h1 = BuildSpace(m, SpaceKind::H1, 1);
  auto rt = BuildSpace(m, SpaceKind::RT, 1);
  auto R = RotatedGradient2D(h1, rt);
  const auto X = LorVertexCoordinates(h1);
  auto vertex_at = [&](double x, double y)
  {
    for (int g = 0; g < h1.n_dofs; g++)
    {
      if (std::abs(X[0][g] - x) < 1e-14 && std::abs(X[1][g] - y) < 1e-14)
      {
        return g;
      }
    }
    return -1;
  };
  std::vector<double> expect(static_cast<std::size_t>(rt.n_dofs) * h1.n_dofs, 0.0);
  const auto locals = LocalDofs(SpaceKind::RT, 2, 1);
  for (int l = 0; l < rt.ndof_per_el; l++)
  {
    const int g = rt.restriction.element_map[l];
    const double s = rt.restriction.signs[l];
    const double fixed = locals[l].dbl[locals[l].comp] / 2;
    if (locals[l].comp == 0)
    {
      expect[g * h1.n_dofs + vertex_at(fixed, 1.0)] = -s;
      expect[g * h1.n_dofs + vertex_at(fixed, 0.0)] = s;
    }
    else
    {
      expect[g * h1.n_dofs + vertex_at(1.0, fixed)] = s;
      expect[g * h1.n_dofs + vertex_at(0.0, fixed)] = -s;
    }
  }
  CHECK(R.ToDense() == expect);
  auto m3 = MakeCartesian(3, {1, 1, 1}, kUnit, 1);
  CHECK_THROWS_AS(RotatedGradient2D(BuildSpace(m3, SpaceKind::H1, 1), BuildSpace(m3, SpaceKind::RT, 1)),
                  std::invalid_argument);
}

TEST_CASE("Discrete curl", "[discrete]")
{
  std::vector<MacroMesh> meshes{MakeCartesian(3, {2, 2, 2}, kUnit, 1), Curved(3, {2, 2, 2}, 2)};
  std::vector<int> perm(27);
  for (int i = 0; i < 27; i++)
  {
    perm[i] = (i * 10) % 27;
  }
  meshes.push_back(RenumberVertices(meshes[0], perm));
  for (const auto &m : meshes)
  {
    for (int p = 1; p <= 4; p++)
    {
      auto h1 = BuildSpace(m, SpaceKind::H1, p);
      auto nd = BuildSpace(m, SpaceKind::ND, p);
      auto rt = BuildSpace(m, SpaceKind::RT, p);
      auto G = DiscreteGradient(h1, nd);
      auto C = DiscreteCurl3D(nd, rt);
      REQUIRE(C.n_rows == rt.n_dofs);
      REQUIRE(C.n_cols == nd.n_dofs);
      CheckIncidence(C, 4);
      auto CG = Spgemm(C, G);
      for (double v : CG.A)
      {
        CHECK(v == 0.0);
      }
      CHECK(PruneZeros(CG).Nnz() == 0);
    }
  }
  // A uniform vector field has zero circulation around every face.
  auto m = MakeCartesian(3, {2, 3, 2}, {{{0.0, 2.0}, {0.0, 1.0}, {-1.0, 1.0}}}, 1);
  auto h1 = BuildSpace(m, SpaceKind::H1, 3);
  auto nd = BuildSpace(m, SpaceKind::ND, 3);
  auto rt = BuildSpace(m, SpaceKind::RT, 3);
  auto G = DiscreteGradient(h1, nd);
  auto C = DiscreteCurl3D(nd, rt);
  const auto X = LorVertexCoordinates(h1);
  const std::array<double, 3> v{0.7, -1.3, 2.1};
  Vector edge(nd.n_dofs, 0.0);
  for (int c = 0; c < 3; c++)
  {
    const auto dx = Spmv(G, X[c]);
    for (int i = 0; i < nd.n_dofs; i++)
    {
      edge[i] += v[c] * dx[i];
    }
  }
  for (double r : Spmv(C, edge))
  {
    CHECK(std::abs(r) < 1e-13);
  }
  auto m2 = MakeCartesian(2, {1, 1, 1}, kUnit, 1);
  CHECK_THROWS_AS(DiscreteCurl3D(BuildSpace(m2, SpaceKind::ND, 1), BuildSpace(m2, SpaceKind::RT, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(DiscreteCurl3D(nd, BuildSpace(m, SpaceKind::RT, 2)), std::invalid_argument);
}

TEST_CASE("LOR vertex coordinates", "[discrete]")
{
  {
    auto m = MakeCartesian(2, {1, 1, 1}, kUnit, 1);
    auto h1 = BuildSpace(m, SpaceKind::H1, 2);
    const auto X = LorVertexCoordinates(h1);
    std::vector<std::pair<double, double>> pts;
    for (int g = 0; g < h1.n_dofs; g++)
    {
      pts.emplace_back(X[0][g], X[1][g]);
    }
    std::sort(pts.begin(), pts.end());
    int k = 0;
    for (double x : {0.0, 0.5, 1.0})
    {
      for (double y : {0.0, 0.5, 1.0})
      {
        CHECK(std::abs(pts[k].first - x) < 1e-15);
        CHECK(std::abs(pts[k].second - y) < 1e-15);
        k++;
      }
    }
  }
  // Isoparametric: the coordinates are the geometry nodes.
  auto m = Curved(2, {2, 2, 1}, 3);
  auto h1 = BuildSpace(m, SpaceKind::H1, 3);
  const auto X = LorVertexCoordinates(h1);
  for (int e = 0; e < m.n_el; e++)
  {
    const auto nodes = m.ElementNodes(e);
    for (int l = 0; l < h1.ndof_per_el; l++)
    {
      const int g = h1.restriction.element_map[e * h1.ndof_per_el + l];
      for (int c = 0; c < 2; c++)
      {
        CHECK(std::abs(X[c][g] - nodes[l * 2 + c]) < 1e-15);
      }
    }
  }
  // Shared DOFs: every owner computes the same position.
  auto m3 = Curved(3, {2, 2, 2}, 2);
  for (int p : {2, 3, 5})
  {
    auto s = BuildSpace(m3, SpaceKind::H1, p);
    const auto Y = LorVertexCoordinates(s);
    const auto L = LatticeCoordinates(m3, p);
    double err = 0.0;
    for (std::size_t slot = 0; slot < s.restriction.element_map.size(); slot++)
    {
      const int g = s.restriction.element_map[slot];
      for (int c = 0; c < 3; c++)
      {
        err = std::max(err, std::abs(L[slot * 3 + c] - Y[c][g]));
      }
    }
    CHECK(err < 1e-13);
  }
}

TEST_CASE("LOR mesh VTK output", "[discrete]")
{
  auto m = MakeCartesian(2, {2, 1, 1}, kUnit, 1);
  auto h1 = BuildSpace(m, SpaceKind::H1, 2);
  const auto path = (std::filesystem::temp_directory_path() / "lor_test_mesh.vtk").string();
  Vector u(h1.n_dofs, 0.5);
  WriteVtkLor(h1, path, u, "pressure");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  CHECK(text.find("POINTS 15 double") != std::string::npos);
  CHECK(text.find("CELLS 8 40") != std::string::npos);
  CHECK(text.find("CELL_TYPES 8") != std::string::npos);
  CHECK(text.find("POINT_DATA 15") != std::string::npos);
  CHECK(text.find("SCALARS pressure double") != std::string::npos);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(WriteVtkLor(h1, path, Vector(3, 0.0)), std::invalid_argument);
}
