// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>
#include "lor/basis.hpp"
#include "lor/mesh.hpp"

namespace lor
{

namespace
{

struct FineGrid
{
  int L = 0;          // resolution level
  int nx = 0, ny = 0; // fine cells per axis
  std::vector<int> owner;

  int At(int i, int j) const { return owner[static_cast<std::size_t>(j) * nx + i]; }
};

// Leaf cell range [x0, x1) x [y0, y1) on the fine grid of level L.
std::array<int, 4> LeafBox(const MacroMesh &base, const NcLeaf &leaf, int L)
{
  const int rx = leaf.root % base.extents[0], ry = leaf.root / base.extents[0];
  const int scale = 1 << (L - leaf.level);
  const int x0 = ((rx << leaf.level) + leaf.ix) * scale;
  const int y0 = ((ry << leaf.level) + leaf.iy) * scale;
  return {x0, x0 + scale, y0, y0 + scale};
}

FineGrid MakeFineGrid(const MacroMesh &base, const std::vector<NcLeaf> &leaves)
{
  FineGrid g;
  for (const auto &l : leaves)
  {
    g.L = std::max(g.L, l.level);
  }
  g.nx = base.extents[0] << g.L;
  g.ny = base.extents[1] << g.L;
  g.owner.assign(static_cast<std::size_t>(g.nx) * g.ny, -1);
  for (int id = 0; id < static_cast<int>(leaves.size()); id++)
  {
    const auto b = LeafBox(base, leaves[id], g.L);
    for (int j = b[2]; j < b[3]; j++)
    {
      for (int i = b[0]; i < b[1]; i++)
      {
        g.owner[static_cast<std::size_t>(j) * g.nx + i] = id;
      }
    }
  }
  return g;
}

// Leaves adjacent across side (a, s) of leaf `id`, in order along the side.
std::vector<int> SideNeighbors(const MacroMesh &base, const std::vector<NcLeaf> &leaves,
                               const FineGrid &g, int id, int a, int s)
{
  const auto b = LeafBox(base, leaves[id], g.L);
  std::vector<int> out;
  if (a == 0)
  {
    const int i = (s == 0) ? b[0] - 1 : b[1];
    if (i < 0 || i >= g.nx)
    {
      return out;
    }
    for (int j = b[2]; j < b[3]; j++)
    {
      const int o = g.At(i, j);
      if (out.empty() || out.back() != o)
      {
        out.push_back(o);
      }
    }
  }
  else
  {
    const int j = (s == 0) ? b[2] - 1 : b[3];
    if (j < 0 || j >= g.ny)
    {
      return out;
    }
    for (int i = b[0]; i < b[1]; i++)
    {
      const int o = g.At(i, j);
      if (out.empty() || out.back() != o)
      {
        out.push_back(o);
      }
    }
  }
  return out;
}

std::vector<NcLeaf> RefineLeaves(const std::vector<NcLeaf> &leaves, const std::vector<char> &mark)
{
  std::vector<NcLeaf> out;
  out.reserve(leaves.size() + 3 * std::count(mark.begin(), mark.end(), 1));
  for (std::size_t i = 0; i < leaves.size(); i++)
  {
    const auto &l = leaves[i];
    if (!mark[i])
    {
      out.push_back(l);
      continue;
    }
    for (int cy = 0; cy < 2; cy++)
    {
      for (int cx = 0; cx < 2; cx++)
      {
        out.push_back({l.root, l.level + 1, 2 * l.ix + cx, 2 * l.iy + cy});
      }
    }
  }
  return out;
}

// Refine until adjacent leaves differ by at most one level.
std::vector<NcLeaf> Enforce1Irregular(const MacroMesh &base, std::vector<NcLeaf> leaves)
{
  while (true)
  {
    const FineGrid g = MakeFineGrid(base, leaves);
    std::vector<char> mark(leaves.size(), 0);
    bool any = false;
    for (int id = 0; id < static_cast<int>(leaves.size()); id++)
    {
      for (int a = 0; a < 2 && !mark[id]; a++)
      {
        for (int s = 0; s < 2; s++)
        {
          for (int n : SideNeighbors(base, leaves, g, id, a, s))
          {
            if (leaves[n].level > leaves[id].level + 1)
            {
              mark[id] = 1;
              any = true;
            }
          }
        }
      }
    }
    if (!any)
    {
      return leaves;
    }
    leaves = RefineLeaves(leaves, mark);
  }
}

void BuildLeafMesh(NcMesh2D &nc)
{
  const MacroMesh &base = nc.base;
  const int pg = base.geom_degree, n1 = pg + 1, nn = n1 * n1;
  const FineGrid g = MakeFineGrid(base, nc.leaves);
  const int nleaf = static_cast<int>(nc.leaves.size());

  MacroMesh &m = nc.leaf_mesh;
  m = MacroMesh{};
  m.dim = 2;
  m.geom_degree = pg;
  m.n_el = nleaf;
  m.elem_vertices.resize(static_cast<std::size_t>(nleaf) * 4);
  m.attributes.resize(nleaf);
  m.facet_attrs.assign(static_cast<std::size_t>(nleaf) * 4, 0);
  m.geom_nodes.resize(static_cast<std::size_t>(nleaf) * nn * 2);

  std::map<std::pair<int, int>, int> vertex_ids;
  std::vector<std::array<int, 2>> vertex_fine;
  const auto gll = GaussLobatto(pg).points;
  for (int id = 0; id < nleaf; id++)
  {
    const auto &leaf = nc.leaves[id];
    const auto b = LeafBox(base, leaf, g.L);
    for (int c = 0; c < 4; c++)
    {
      const int gx = (c & 1) ? b[1] : b[0];
      const int gy = (c & 2) ? b[3] : b[2];
      auto [it, inserted] = vertex_ids.try_emplace({gx, gy}, static_cast<int>(vertex_ids.size()));
      if (inserted)
      {
        vertex_fine.push_back({gx, gy});
      }
      m.elem_vertices[static_cast<std::size_t>(id) * 4 + c] = it->second;
    }
    m.attributes[id] = base.attributes[leaf.root];
    const int n_sub = 1 << leaf.level;
    const std::array<int, 2> pos{leaf.ix, leaf.iy};
    for (int a = 0; a < 2; a++)
    {
      for (int s = 0; s < 2; s++)
      {
        const bool on_root_side = (s == 0) ? pos[a] == 0 : pos[a] == n_sub - 1;
        if (on_root_side)
        {
          m.facet_attrs[static_cast<std::size_t>(id) * 4 + 2 * a + s] =
              base.facet_attrs[static_cast<std::size_t>(leaf.root) * 4 + 2 * a + s];
        }
      }
    }
    // Child geometry by evaluating the root map at the child's Gauss-Lobatto nodes.
    const auto X = base.ElementNodes(leaf.root);
    double *Y = &m.geom_nodes[static_cast<std::size_t>(id) * nn * 2];
    if (leaf.level == 0)
    {
      std::copy(X.begin(), X.end(), Y);
      continue;
    }
    std::array<DenseMatrix, 2> B, D;
    for (int a = 0; a < 2; a++)
    {
      const double lo = -1.0 + 2.0 * pos[a] / n_sub, hi = -1.0 + 2.0 * (pos[a] + 1) / n_sub;
      std::vector<double> pts(n1);
      for (int i = 0; i < n1; i++)
      {
        pts[i] = lo + 0.5 * (gll[i] + 1.0) * (hi - lo);
      }
      pts[0] = lo;
      pts[pg] = hi;
      LagrangeMatrices(gll, pts, B[a], D[a]);
    }
    for (int j = 0; j < n1; j++)
    {
      for (int i = 0; i < n1; i++)
      {
        for (int c = 0; c < 2; c++)
        {
          double v = 0.0;
          for (int bj = 0; bj < n1; bj++)
          {
            for (int bi = 0; bi < n1; bi++)
            {
              v += B[0](i, bi) * B[1](j, bj) * X[(bi + n1 * bj) * 2 + c];
            }
          }
          Y[(i + n1 * j) * 2 + c] = v;
        }
      }
    }
  }
  m.n_vertices = static_cast<int>(vertex_ids.size());
  BuildTopology(m);

  // Master/slave interfaces: sides of a leaf whose neighbors are one level finer.
  nc.master_slave_edges.clear();
  for (int id = 0; id < nleaf; id++)
  {
    for (int a = 0; a < 2; a++)
    {
      for (int s = 0; s < 2; s++)
      {
        const auto nbrs = SideNeighbors(base, nc.leaves, g, id, a, s);
        if (nbrs.size() != 2 || nc.leaves[nbrs[0]].level != nc.leaves[id].level + 1)
        {
          continue;
        }
        const int b_axis = 1 - a;
        MasterSlaveEdge ms;
        ms.master_elem = id;
        ms.master_edge = m.elem_edges[static_cast<std::size_t>(id) * 4 +
                                      LocalEdgeIndex(2, b_axis, s << a)];
        const auto mv = m.edge_vertices[ms.master_edge];
        const double c_start = vertex_fine[mv[0]][b_axis];
        const double len = std::abs(vertex_fine[mv[1]][b_axis] - c_start);
        for (int k = 0; k < 2; k++)
        {
          const int n = nbrs[k];
          ms.slave_elems[k] = n;
          ms.slave_edges[k] = m.elem_edges[static_cast<std::size_t>(n) * 4 +
                                           LocalEdgeIndex(2, b_axis, (1 - s) << a)];
          const auto sv = m.edge_vertices[ms.slave_edges[k]];
          for (int q = 0; q < 2; q++)
          {
            ms.slave_t[k][q] = std::abs(vertex_fine[sv[q]][b_axis] - c_start) / len;
          }
        }
        const auto s0 = m.edge_vertices[ms.slave_edges[0]];
        const auto s1 = m.edge_vertices[ms.slave_edges[1]];
        for (int v : s0)
        {
          if (v == s1[0] || v == s1[1])
          {
            ms.hanging_vertex = v;
          }
        }
        nc.master_slave_edges.push_back(ms);
      }
    }
  }
}

}  // namespace

int NcMesh2D::MaxLevel() const
{
  int L = 0;
  for (const auto &l : leaves)
  {
    L = std::max(L, l.level);
  }
  return L;
}

NcMesh2D MakeNcMesh(const MacroMesh &base)
{
  Require(base.dim == 2, "MakeNcMesh: nonconforming refinement is 2D only");
  Require(base.Structured(), "MakeNcMesh: base mesh must be a structured box mesh");
  NcMesh2D nc;
  nc.base = base;
  nc.leaves.resize(base.n_el);
  for (int e = 0; e < base.n_el; e++)
  {
    nc.leaves[e] = {e, 0, 0, 0};
  }
  BuildLeafMesh(nc);
  return nc;
}

NcMesh2D RefineNonconforming(const NcMesh2D &nc, const std::set<int> &marks)
{
  std::vector<char> mark(nc.leaves.size(), 0);
  for (int m : marks)
  {
    Require(m >= 0 && m < static_cast<int>(nc.leaves.size()),
            "RefineNonconforming: mark out of range");
    mark[m] = 1;
  }
  NcMesh2D out;
  out.base = nc.base;
  out.leaves = Enforce1Irregular(nc.base, RefineLeaves(nc.leaves, mark));
  BuildLeafMesh(out);
  return out;
}

NcMesh2D RefineNonconforming(const MacroMesh &mesh, const std::set<int> &marks)
{
  return RefineNonconforming(MakeNcMesh(mesh), marks);
}

}  // namespace lor
