// SPDX-License-Identifier: Apache-2.0

#include "lor/spaces.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace lor
{

const char *SpaceKindName(SpaceKind kind)
{
  switch (kind)
  {
    case SpaceKind::H1:
      return "H1";
    case SpaceKind::ND:
      return "ND";
    default:
      return "RT";
  }
}

int NumComponents(SpaceKind kind, int dim)
{
  return kind == SpaceKind::H1 ? 1 : dim;
}

std::array<int, 3> ComponentShape(SpaceKind kind, int dim, int p, int comp)
{
  std::array<int, 3> s{1, 1, 1};
  for (int a = 0; a < dim; a++)
  {
    switch (kind)
    {
      case SpaceKind::H1:
        s[a] = p + 1;
        break;
      case SpaceKind::ND:
        s[a] = (a == comp) ? p : p + 1;
        break;
      case SpaceKind::RT:
        s[a] = (a == comp) ? p + 1 : p;
        break;
    }
  }
  return s;
}

bool ClosedAlong(SpaceKind kind, int comp, int axis)
{
  switch (kind)
  {
    case SpaceKind::H1:
      return true;
    case SpaceKind::ND:
      return axis != comp;
    default:
      return axis == comp;
  }
}

int LocalDofIndex(SpaceKind kind, int dim, int p, int comp, const std::array<int, 3> &dbl)
{
  int offset = 0;
  for (int c = 0; c < comp; c++)
  {
    const auto s = ComponentShape(kind, dim, p, c);
    offset += s[0] * s[1] * s[2];
  }
  const auto s = ComponentShape(kind, dim, p, comp);
  int idx = 0;
  for (int a = dim - 1; a >= 0; a--)
  {
    const int m = ClosedAlong(kind, comp, a) ? dbl[a] / 2 : (dbl[a] - 1) / 2;
    Require(m >= 0 && m < s[a], "LocalDofIndex: position outside the element");
    idx = idx * s[a] + m;
  }
  return offset + idx;
}

std::vector<LocalDof> LocalDofs(SpaceKind kind, int dim, int p)
{
  std::vector<LocalDof> dofs;
  for (int c = 0; c < NumComponents(kind, dim); c++)
  {
    const auto s = ComponentShape(kind, dim, p, c);
    for (int k = 0; k < s[2]; k++)
    {
      for (int j = 0; j < s[1]; j++)
      {
        for (int i = 0; i < s[0]; i++)
        {
          LocalDof d;
          d.comp = c;
          const std::array<int, 3> mi{i, j, k};
          for (int a = 0; a < dim; a++)
          {
            bool odd = false;
            if (kind == SpaceKind::ND)
            {
              odd = (a == c);
            }
            else if (kind == SpaceKind::RT)
            {
              odd = (a != c);
            }
            d.dbl[a] = 2 * mi[a] + (odd ? 1 : 0);
          }
          dofs.push_back(d);
        }
      }
    }
  }
  return dofs;
}

namespace
{

enum EntityType
{
  kVertex = 0,
  kEdge = 1,
  kFace = 2,
  kInterior = 3
};

struct DofEntity
{
  int type = kInterior;
  int local = 0;  // corner, local edge or local facet
  int pos = 0;    // position among the entity's DOFs in local orientation
};

// Classify local DOFs by the macro entity (vertex, edge, face, interior) carrying them.
std::vector<DofEntity> ClassifyDofs(const std::vector<LocalDof> &dofs, int dim, int p,
                                    std::array<int, 4> &per_entity)
{
  std::vector<DofEntity> ent(dofs.size());
  std::map<std::pair<int, int>, int> counter;
  for (std::size_t i = 0; i < dofs.size(); i++)
  {
    const auto &d = dofs[i];
    int n_ext = 0, corner = 0;
    int free_axis = -1, bound_axis = -1;
    for (int a = 0; a < dim; a++)
    {
      if (d.dbl[a] == 0 || d.dbl[a] == 2 * p)
      {
        n_ext++;
        corner |= (d.dbl[a] == 2 * p ? 1 : 0) << a;
        bound_axis = a;
      }
      else
      {
        free_axis = a;
      }
    }
    DofEntity &en = ent[i];
    if (n_ext == dim)
    {
      en.type = kVertex;
      en.local = corner;
    }
    else if (n_ext == dim - 1)
    {
      en.type = kEdge;
      en.local = LocalEdgeIndex(dim, free_axis, corner);
    }
    else if (dim == 3 && n_ext == 1)
    {
      en.type = kFace;
      en.local = 2 * bound_axis + ((corner >> bound_axis) & 1);
    }
    else
    {
      en.type = kInterior;
      en.local = 0;
    }
    en.pos = counter[{en.type, en.local}]++;
  }
  per_entity = {0, 0, 0, 0};
  for (const auto &[key, n] : counter)
  {
    per_entity[key.first] = std::max(per_entity[key.first], n);
  }
  return ent;
}

}  // namespace

FESpace BuildSpace(const MacroMesh &mesh, SpaceKind kind, int p)
{
  Require(p >= 1, "BuildSpace: degree must be at least 1");
  Require(mesh.dim == 2 || mesh.dim == 3, "BuildSpace: dimension must be 2 or 3");
  FESpace s;
  s.kind = kind;
  s.p = p;
  s.dim = mesh.dim;
  s.mesh = &mesh;
  s.local_dofs = LocalDofs(kind, mesh.dim, p);
  s.ndof_per_el = static_cast<int>(s.local_dofs.size());

  std::array<int, 4> per{};
  const auto ent = ClassifyDofs(s.local_dofs, mesh.dim, p, per);
  const std::array<int, 4> n_ent{mesh.n_vertices, mesh.n_edges, mesh.n_faces, mesh.n_el};
  std::array<int, 4> offset{};
  int total = 0;
  for (int t = 0; t < 4; t++)
  {
    offset[t] = total;
    total += per[t] * n_ent[t];
  }
  s.n_dofs = total;

  Restriction &r = s.restriction;
  r.n_el = mesh.n_el;
  r.ndof_per_el = s.ndof_per_el;
  r.n_dofs = total;
  r.element_map.resize(static_cast<std::size_t>(mesh.n_el) * s.ndof_per_el);
  r.signs.assign(r.element_map.size(), 1);
  const int nc = mesh.NumCorners(), ne = mesh.NumLocalEdges();
  for (int e = 0; e < mesh.n_el; e++)
  {
    const int *v = &mesh.elem_vertices[static_cast<std::size_t>(e) * nc];
    for (int i = 0; i < s.ndof_per_el; i++)
    {
      const auto &en = ent[i];
      int g = 0, sign = 1;
      switch (en.type)
      {
        case kVertex:
          g = offset[kVertex] + v[en.local] * per[kVertex] + en.pos;
          break;
        case kEdge:
        {
          const int ge = mesh.elem_edges[static_cast<std::size_t>(e) * ne + en.local];
          const auto c = LocalEdgeCorners(mesh.dim, en.local);
          const bool reversed = v[c[0]] > v[c[1]];
          const int pos = reversed ? per[kEdge] - 1 - en.pos : en.pos;
          g = offset[kEdge] + ge * per[kEdge] + pos;
          if (reversed && kind == SpaceKind::ND)
          {
            sign = -1;
          }
          break;
        }
        case kFace:
          g = offset[kFace] + mesh.elem_faces[static_cast<std::size_t>(e) * 6 + en.local] *
                                  per[kFace] +
              en.pos;
          break;
        default:
          g = offset[kInterior] + e * per[kInterior] + en.pos;
          break;
      }
      r.element_map[static_cast<std::size_t>(e) * s.ndof_per_el + i] = g;
      r.signs[static_cast<std::size_t>(e) * s.ndof_per_el + i] = static_cast<signed char>(sign);
    }
  }

  r.offsets.assign(total + 1, 0);
  for (int g : r.element_map)
  {
    r.offsets[g + 1]++;
  }
  for (int g = 0; g < total; g++)
  {
    r.offsets[g + 1] += r.offsets[g];
  }
  r.indices.resize(r.element_map.size());
  std::vector<int> next(r.offsets.begin(), r.offsets.end() - 1);
  for (std::size_t k = 0; k < r.element_map.size(); k++)
  {
    r.indices[next[r.element_map[k]]++] = static_cast<int>(k);
  }
  return s;
}

void RestrictionApply(const Restriction &r, std::span<const double> x, std::span<double> e)
{
  Require(static_cast<int>(x.size()) == r.n_dofs &&
              e.size() == static_cast<std::size_t>(r.n_el) * r.ndof_per_el,
          "RestrictionApply: shape mismatch");
  ParallelFor(static_cast<long>(e.size()),
              [&](long k) { e[k] = r.signs[k] * x[r.element_map[k]]; });
}

Vector RestrictionApply(const Restriction &r, std::span<const double> x)
{
  Vector e(static_cast<std::size_t>(r.n_el) * r.ndof_per_el);
  RestrictionApply(r, x, e);
  return e;
}

void RestrictionApplyTranspose(const Restriction &r, std::span<const double> e,
                               std::span<double> x)
{
  Require(static_cast<int>(x.size()) == r.n_dofs &&
              e.size() == static_cast<std::size_t>(r.n_el) * r.ndof_per_el,
          "RestrictionApplyTranspose: shape mismatch");
  ParallelFor(r.n_dofs, [&](long g)
              {
                double s = 0.0;
                for (int t = r.offsets[g]; t < r.offsets[g + 1]; t++)
                {
                  const int k = r.indices[t];
                  s += r.signs[k] * e[k];
                }
                x[g] = s;
              });
}

Vector RestrictionApplyTranspose(const Restriction &r, std::span<const double> e)
{
  Vector x(r.n_dofs);
  RestrictionApplyTranspose(r, e, x);
  return x;
}

std::vector<int> BoundaryDofs(const FESpace &space, const std::set<int> &attrs)
{
  const MacroMesh &mesh = *space.mesh;
  const int nf = mesh.NumLocalFacets();
  std::vector<int> out;
  for (int e = 0; e < mesh.n_el; e++)
  {
    for (int f = 0; f < nf; f++)
    {
      const int attr = mesh.facet_attrs[static_cast<std::size_t>(e) * nf + f];
      if (attr == 0 || (!attrs.empty() && !attrs.count(attr)))
      {
        continue;
      }
      const int a = f / 2, side = f % 2;
      for (int i = 0; i < space.ndof_per_el; i++)
      {
        if (space.local_dofs[i].dbl[a] == side * 2 * space.p)
        {
          out.push_back(
              space.restriction.element_map[static_cast<std::size_t>(e) * space.ndof_per_el + i]);
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ConstraintMatrix BuildNcConstraints(const NcMesh2D &nc, const FESpace &space)
{
  Require(space.kind == SpaceKind::H1,
          "BuildNcConstraints: only H1 spaces are supported on nonconforming meshes");
  Require(space.mesh == &nc.leaf_mesh, "BuildNcConstraints: space must live on the leaf mesh");
  const MacroMesh &m = nc.leaf_mesh;
  const int p = space.p;
  const int n = space.n_dofs;
  const int edge_offset = m.n_vertices;

  // DOFs along an edge in its global orientation: start vertex, interior, end vertex.
  auto edge_dofs = [&](int edge)
  {
    std::vector<int> d(p + 1);
    d[0] = m.edge_vertices[edge][0];
    d[p] = m.edge_vertices[edge][1];
    for (int k = 1; k < p; k++)
    {
      d[k] = edge_offset + edge * (p - 1) + (k - 1);
    }
    return d;
  };

  const auto gll = GaussLobatto(p).points;
  // Slave DOF -> (master DOF, weight) list, possibly referencing other slaves.
  std::map<int, std::vector<std::pair<int, double>>> deps;
  for (const auto &ms : nc.master_slave_edges)
  {
    const auto md = edge_dofs(ms.master_edge);
    auto add_row = [&](int slave, double t)
    {
      const double xi = 2.0 * t - 1.0;
      DenseMatrix B, D;
      const double pt[1] = {xi};
      LagrangeMatrices(gll, pt, B, D);
      std::vector<std::pair<int, double>> row;
      for (int k = 0; k <= p; k++)
      {
        row.emplace_back(md[k], B(0, k));
      }
      deps[slave] = row;
    };
    add_row(ms.hanging_vertex, 0.5);
    for (int s = 0; s < 2; s++)
    {
      const auto sd = edge_dofs(ms.slave_edges[s]);
      for (int k = 1; k < p; k++)
      {
        const double u = 0.5 * (gll[k] + 1.0);
        add_row(sd[k], ms.slave_t[s][0] + u * (ms.slave_t[s][1] - ms.slave_t[s][0]));
      }
    }
  }

  // Resolve chains of constraints (a master DOF that is itself a slave).
  std::map<int, std::vector<std::pair<int, double>>> resolved;
  std::function<const std::vector<std::pair<int, double>> &(int, int)> resolve =
      [&](int dof, int depth) -> const std::vector<std::pair<int, double>> &
  {
    Require(depth < 64, "BuildNcConstraints: cyclic constraints (mesh not 1-irregular?)");
    auto it = resolved.find(dof);
    if (it != resolved.end())
    {
      return it->second;
    }
    std::map<int, double> acc;
    for (const auto &[master, w] : deps.at(dof))
    {
      if (deps.count(master))
      {
        for (const auto &[mm, ww] : resolve(master, depth + 1))
        {
          acc[mm] += w * ww;
        }
      }
      else
      {
        acc[master] += w;
      }
    }
    auto &row = resolved[dof];
    row.assign(acc.begin(), acc.end());
    return row;
  };

  ConstraintMatrix c;
  c.full_to_true.assign(n, -1);
  for (int g = 0; g < n; g++)
  {
    if (deps.count(g))
    {
      c.slave_dofs.push_back(g);
    }
    else
    {
      c.full_to_true[g] = static_cast<int>(c.true_to_full.size());
      c.true_to_full.push_back(g);
    }
  }
  CsrMatrix &L = c.Lambda;
  L.n_rows = n;
  L.n_cols = c.NumTrue();
  L.I.assign(n + 1, 0);
  for (int g = 0; g < n; g++)
  {
    if (c.full_to_true[g] >= 0)
    {
      L.J.push_back(c.full_to_true[g]);
      L.A.push_back(1.0);
    }
    else
    {
      for (const auto &[master, w] : resolve(g, 0))
      {
        L.J.push_back(c.full_to_true[master]);
        L.A.push_back(w);
      }
    }
    L.I[g + 1] = static_cast<int>(L.J.size());
  }
  return c;
}

std::vector<int> RestrictToTrue(const ConstraintMatrix &c, std::span<const int> full_dofs)
{
  std::vector<int> out;
  for (int g : full_dofs)
  {
    if (c.full_to_true[g] >= 0)
    {
      out.push_back(c.full_to_true[g]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace lor
