// SPDX-License-Identifier: Apache-2.0

#include "lor/discrete.hpp"

#include <algorithm>
#include <fstream>
#include <fmt/format.h>

namespace lor
{

namespace
{

void CheckPair(const FESpace &a, const FESpace &b, const char *name)
{
  Require(a.mesh == b.mesh, fmt::format("{}: spaces are defined on different meshes", name));
  Require(a.p == b.p, fmt::format("{}: spaces have different degrees", name));
}

// First E-vector slot of every global DOF.
int FirstSlot(const Restriction &r, int g)
{
  return r.indices[r.offsets[g]];
}

// Row g of a signed incidence matrix: sorted (column, value) pairs.
CsrMatrix BuildIncidence(int n_rows, int n_cols, int per_row,
                         const std::function<void(int, int *, int *)> &row)
{
  CsrMatrix M;
  M.n_rows = n_rows;
  M.n_cols = n_cols;
  M.I.resize(n_rows + 1);
  for (int i = 0; i <= n_rows; i++)
  {
    M.I[i] = i * per_row;
  }
  M.J.resize(static_cast<std::size_t>(n_rows) * per_row);
  M.A.resize(M.J.size());
  ParallelFor(n_rows, [&](long i)
              {
                std::array<int, 4> col{}, val{};
                row(static_cast<int>(i), col.data(), val.data());
                std::array<int, 4> order{0, 1, 2, 3};
                std::sort(order.begin(), order.begin() + per_row,
                          [&](int a, int b) { return col[a] < col[b]; });
                for (int k = 0; k < per_row; k++)
                {
                  M.J[i * per_row + k] = col[order[k]];
                  M.A[i * per_row + k] = val[order[k]];
                }
              });
  return M;
}

}  // namespace

TopoOpTables BuildTopoOpTables(int dim, int p)
{
  Require(dim == 2 || dim == 3, "BuildTopoOpTables: dimension must be 2 or 3");
  Require(p >= 1, "BuildTopoOpTables: degree must be at least 1");
  TopoOpTables t;
  t.dim = dim;
  t.p = p;
  const auto nd = LocalDofs(SpaceKind::ND, dim, p);
  t.edge_to_vertex.resize(2 * nd.size());
  for (std::size_t i = 0; i < nd.size(); i++)
  {
    auto lo = nd[i].dbl, hi = nd[i].dbl;
    lo[nd[i].comp]--;
    hi[nd[i].comp]++;
    t.edge_to_vertex[2 * i] = LocalDofIndex(SpaceKind::H1, dim, p, 0, lo);
    t.edge_to_vertex[2 * i + 1] = LocalDofIndex(SpaceKind::H1, dim, p, 0, hi);
  }
  if (dim == 3)
  {
    const auto rt = LocalDofs(SpaceKind::RT, dim, p);
    t.face_to_edge.resize(4 * rt.size());
    t.face_sign.resize(4 * rt.size());
    for (std::size_t f = 0; f < rt.size(); f++)
    {
      const int a = rt[f].comp, b = (a + 1) % 3, c = (a + 2) % 3;
      // Counter-clockwise around +a: +b at -c, +c at +b, -b at +c, -c at -b.
      const std::array<std::array<int, 3>, 4> edges{{{b, c, -1}, {c, b, +1}, {b, c, +1},
                                                      {c, b, -1}}};
      const std::array<int, 4> sgn{+1, +1, -1, -1};
      for (int k = 0; k < 4; k++)
      {
        auto dbl = rt[f].dbl;
        dbl[edges[k][1]] += edges[k][2];
        t.face_to_edge[4 * f + k] = LocalDofIndex(SpaceKind::ND, dim, p, edges[k][0], dbl);
        t.face_sign[4 * f + k] = sgn[k];
      }
    }
  }
  return t;
}

CsrMatrix DiscreteGradient(const FESpace &h1, const FESpace &nd)
{
  Require(h1.kind == SpaceKind::H1 && nd.kind == SpaceKind::ND,
          "DiscreteGradient: expected H1 and ND spaces");
  CheckPair(h1, nd, "DiscreteGradient");
  const auto t = BuildTopoOpTables(h1.dim, h1.p);
  const Restriction &rh = h1.restriction, &re = nd.restriction;
  return BuildIncidence(nd.n_dofs, h1.n_dofs, 2,
                        [&](int g, int *col, int *val)
                        {
                          const int slot = FirstSlot(re, g);
                          const int e = slot / re.ndof_per_el, i = slot % re.ndof_per_el;
                          const int s = re.signs[slot];
                          const std::size_t base = static_cast<std::size_t>(e) * rh.ndof_per_el;
                          col[0] = rh.element_map[base + t.edge_to_vertex[2 * i]];
                          col[1] = rh.element_map[base + t.edge_to_vertex[2 * i + 1]];
                          val[0] = -s;
                          val[1] = s;
                        });
}

CsrMatrix RotatedGradient2D(const FESpace &h1, const FESpace &rt)
{
  Require(h1.kind == SpaceKind::H1 && rt.kind == SpaceKind::RT,
          "RotatedGradient2D: expected H1 and RT spaces");
  Require(h1.dim == 2, "RotatedGradient2D: two-dimensional spaces required");
  CheckPair(h1, rt, "RotatedGradient2D");
  const int p = h1.p;
  const Restriction &rh = h1.restriction, &rr = rt.restriction;
  return BuildIncidence(rt.n_dofs, h1.n_dofs, 2,
                        [&](int g, int *col, int *val)
                        {
                          const int slot = FirstSlot(rr, g);
                          const int e = slot / rr.ndof_per_el, i = slot % rr.ndof_per_el;
                          const auto &dof = rt.local_dofs[i];
                          // The DOF sits on a subedge along the other axis.
                          const int along = 1 - dof.comp;
                          auto lo = dof.dbl, hi = dof.dbl;
                          lo[along]--;
                          hi[along]++;
                          const std::size_t base = static_cast<std::size_t>(e) * rh.ndof_per_el;
                          col[0] = rh.element_map[base + LocalDofIndex(SpaceKind::H1, 2, p, 0, lo)];
                          col[1] = rh.element_map[base + LocalDofIndex(SpaceKind::H1, 2, p, 0, hi)];
                          const int s = rr.signs[slot] * (dof.comp == 0 ? -1 : 1);
                          val[0] = -s;
                          val[1] = s;
                        });
}

CsrMatrix DiscreteCurl3D(const FESpace &nd, const FESpace &rt)
{
  Require(nd.kind == SpaceKind::ND && rt.kind == SpaceKind::RT,
          "DiscreteCurl3D: expected ND and RT spaces");
  Require(nd.dim == 3, "DiscreteCurl3D: three-dimensional spaces required");
  CheckPair(nd, rt, "DiscreteCurl3D");
  const auto t = BuildTopoOpTables(3, nd.p);
  const Restriction &re = nd.restriction, &rr = rt.restriction;
  return BuildIncidence(rt.n_dofs, nd.n_dofs, 4,
                        [&](int g, int *col, int *val)
                        {
                          const int slot = FirstSlot(rr, g);
                          const int e = slot / rr.ndof_per_el, f = slot % rr.ndof_per_el;
                          const std::size_t base = static_cast<std::size_t>(e) * re.ndof_per_el;
                          for (int k = 0; k < 4; k++)
                          {
                            const std::size_t es = base + t.face_to_edge[4 * f + k];
                            col[k] = re.element_map[es];
                            val[k] = rr.signs[slot] * re.signs[es] * t.face_sign[4 * f + k];
                          }
                        });
}

std::vector<Vector> LorVertexCoordinates(const FESpace &h1)
{
  Require(h1.kind == SpaceKind::H1, "LorVertexCoordinates: H1 space required");
  const int d = h1.dim;
  const auto X = LatticeCoordinates(*h1.mesh, h1.p);
  const Restriction &r = h1.restriction;
  // The H1 E-vector order is the lattice order.
  std::vector<Vector> coords(d, Vector(h1.n_dofs));
  ParallelFor(h1.n_dofs, [&](long g)
              {
                const int slot = FirstSlot(r, static_cast<int>(g));
                for (int c = 0; c < d; c++)
                {
                  coords[c][g] = X[static_cast<std::size_t>(slot) * d + c];
                }
              });
  return coords;
}

void WriteVtkLor(const FESpace &h1, const std::string &path, std::span<const double> point_data,
                 const std::string &name)
{
  Require(h1.kind == SpaceKind::H1, "WriteVtkLor: H1 space required");
  Require(point_data.empty() || static_cast<int>(point_data.size()) == h1.n_dofs,
          "WriteVtkLor: point data size mismatch");
  const int d = h1.dim, p = h1.p, n = h1.n_dofs;
  const auto X = LorVertexCoordinates(h1);
  std::ofstream out(path);
  Require(static_cast<bool>(out), "WriteVtkLor: cannot open " + path);
  out << "# vtk DataFile Version 3.0\nLOR mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << n << " double\n";
  for (int g = 0; g < n; g++)
  {
    out << fmt::format("{:.17g} {:.17g} {:.17g}\n", X[0][g], X[1][g], d == 3 ? X[2][g] : 0.0);
  }
  const int nsub = IPow(p, d), nv = 1 << d;
  const long n_cells = static_cast<long>(h1.mesh->n_el) * nsub;
  const std::array<int, 8> vtk_order{0, 1, 3, 2, 4, 5, 7, 6};
  out << "CELLS " << n_cells << " " << n_cells * (nv + 1) << "\n";
  for (int e = 0; e < h1.mesh->n_el; e++)
  {
    for (int s = 0; s < nsub; s++)
    {
      std::array<int, 3> si{s % p, (s / p) % p, s / (p * p)};
      out << nv;
      for (int k = 0; k < nv; k++)
      {
        const int w = vtk_order[k];
        std::array<int, 3> dbl{0, 0, 0};
        for (int a = 0; a < d; a++)
        {
          dbl[a] = 2 * (si[a] + ((w >> a) & 1));
        }
        const int li = LocalDofIndex(SpaceKind::H1, d, p, 0, dbl);
        out << " " << h1.restriction.element_map[static_cast<std::size_t>(e) * h1.ndof_per_el + li];
      }
      out << "\n";
    }
  }
  out << "CELL_TYPES " << n_cells << "\n";
  for (long c = 0; c < n_cells; c++)
  {
    out << (d == 2 ? 9 : 12) << "\n";
  }
  if (!point_data.empty())
  {
    out << "POINT_DATA " << n << "\nSCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int g = 0; g < n; g++)
    {
      out << fmt::format("{:.17g}\n", point_data[g]);
    }
  }
}

}  // namespace lor
