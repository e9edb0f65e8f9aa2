// SPDX-License-Identifier: Apache-2.0

#include "lor/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include "lor/basis.hpp"

namespace lor
{

namespace
{

std::array<int, 2> OtherAxes(int a)
{
  switch (a)
  {
    case 0:
      return {1, 2};
    case 1:
      return {0, 2};
    default:
      return {0, 1};
  }
}

}  // namespace

int LocalEdgeAxis(int dim, int edge)
{
  return edge / (1 << (dim - 1));
}

std::array<int, 2> LocalEdgeCorners(int dim, int edge)
{
  const int per_axis = 1 << (dim - 1);
  const int a = edge / per_axis;
  const int r = edge % per_axis;
  int start = 0;
  if (dim == 2)
  {
    const int b = 1 - a;
    start = r << b;
  }
  else
  {
    const auto o = OtherAxes(a);
    start = ((r & 1) << o[0]) | (((r >> 1) & 1) << o[1]);
  }
  return {start, start | (1 << a)};
}

int LocalEdgeIndex(int dim, int axis, int corner_of_start)
{
  const int per_axis = 1 << (dim - 1);
  if (dim == 2)
  {
    const int b = 1 - axis;
    return axis * per_axis + ((corner_of_start >> b) & 1);
  }
  const auto o = OtherAxes(axis);
  return axis * per_axis + ((corner_of_start >> o[0]) & 1) +
         2 * ((corner_of_start >> o[1]) & 1);
}

std::array<int, 4> LocalFaceCorners(int face)
{
  const int a = face / 2, s = face % 2;
  const auto o = OtherAxes(a);
  std::array<int, 4> c{};
  for (int j = 0; j < 2; j++)
  {
    for (int i = 0; i < 2; i++)
    {
      c[i + 2 * j] = (s << a) | (i << o[0]) | (j << o[1]);
    }
  }
  return c;
}

void BuildTopology(MacroMesh &mesh)
{
  const int nc = mesh.NumCorners();
  const int ne = mesh.NumLocalEdges();
  std::map<std::array<int, 2>, int> edge_ids;
  mesh.elem_edges.assign(static_cast<std::size_t>(mesh.n_el) * ne, -1);
  mesh.edge_vertices.clear();
  for (int e = 0; e < mesh.n_el; e++)
  {
    const int *v = &mesh.elem_vertices[static_cast<std::size_t>(e) * nc];
    for (int le = 0; le < ne; le++)
    {
      const auto c = LocalEdgeCorners(mesh.dim, le);
      std::array<int, 2> key{std::min(v[c[0]], v[c[1]]), std::max(v[c[0]], v[c[1]])};
      auto [it, inserted] = edge_ids.try_emplace(key, static_cast<int>(edge_ids.size()));
      if (inserted)
      {
        mesh.edge_vertices.push_back(key);
      }
      mesh.elem_edges[static_cast<std::size_t>(e) * ne + le] = it->second;
    }
  }
  mesh.n_edges = static_cast<int>(edge_ids.size());
  mesh.n_faces = 0;
  mesh.elem_faces.clear();
  if (mesh.dim == 3)
  {
    std::map<std::array<int, 4>, int> face_ids;
    mesh.elem_faces.assign(static_cast<std::size_t>(mesh.n_el) * 6, -1);
    for (int e = 0; e < mesh.n_el; e++)
    {
      const int *v = &mesh.elem_vertices[static_cast<std::size_t>(e) * nc];
      for (int f = 0; f < 6; f++)
      {
        const auto c = LocalFaceCorners(f);
        std::array<int, 4> key{v[c[0]], v[c[1]], v[c[2]], v[c[3]]};
        std::sort(key.begin(), key.end());
        auto it = face_ids.try_emplace(key, static_cast<int>(face_ids.size())).first;
        mesh.elem_faces[static_cast<std::size_t>(e) * 6 + f] = it->second;
      }
    }
    mesh.n_faces = static_cast<int>(face_ids.size());
  }
}

MacroMesh MakeCartesian(int dim, std::array<int, 3> counts,
                        std::array<std::array<double, 2>, 3> bounds, int geom_degree)
{
  Require(dim == 2 || dim == 3, "MakeCartesian: dimension must be 2 or 3");
  Require(geom_degree >= 1, "MakeCartesian: geometry degree must be at least 1");
  for (int a = 0; a < dim; a++)
  {
    Require(counts[a] >= 1, "MakeCartesian: element counts must be positive");
    Require(bounds[a][1] > bounds[a][0], "MakeCartesian: bounds must be nondegenerate");
  }
  MacroMesh mesh;
  mesh.dim = dim;
  mesh.geom_degree = geom_degree;
  if (dim == 2)
  {
    counts[2] = 1;
    bounds[2] = {0.0, 1.0};
  }
  mesh.extents = {counts[0], counts[1], dim == 3 ? counts[2] : 1};
  const int nx = counts[0], ny = counts[1], nz = (dim == 3) ? counts[2] : 1;
  mesh.n_el = nx * ny * nz;
  const int vx = nx + 1, vy = ny + 1, vz = (dim == 3) ? nz + 1 : 1;
  mesh.n_vertices = vx * vy * vz;
  const int nc = mesh.NumCorners();
  mesh.elem_vertices.resize(static_cast<std::size_t>(mesh.n_el) * nc);
  mesh.attributes.assign(mesh.n_el, 1);
  mesh.facet_attrs.assign(static_cast<std::size_t>(mesh.n_el) * 2 * dim, 0);

  const auto gll = GaussLobatto(geom_degree).points;
  const int n1 = geom_degree + 1;
  const int nn = mesh.NodesPerElement();
  mesh.geom_nodes.resize(static_cast<std::size_t>(mesh.n_el) * nn * dim);
  const std::array<double, 3> h{(bounds[0][1] - bounds[0][0]) / nx,
                                (bounds[1][1] - bounds[1][0]) / ny,
                                (bounds[2][1] - bounds[2][0]) / nz};
  for (int ez = 0; ez < nz; ez++)
  {
    for (int ey = 0; ey < ny; ey++)
    {
      for (int ex = 0; ex < nx; ex++)
      {
        const int e = ex + nx * (ey + ny * ez);
        const std::array<int, 3> ei{ex, ey, ez};
        for (int c = 0; c < nc; c++)
        {
          const int bx = c & 1, by = (c >> 1) & 1, bz = (c >> 2) & 1;
          mesh.elem_vertices[static_cast<std::size_t>(e) * nc + c] =
              (ex + bx) + vx * ((ey + by) + vy * (ez + bz));
        }
        for (int a = 0; a < dim; a++)
        {
          const int n_a = counts[a];
          if (ei[a] == 0)
          {
            mesh.facet_attrs[static_cast<std::size_t>(e) * 2 * dim + 2 * a] = 1 + 2 * a;
          }
          if (ei[a] == n_a - 1)
          {
            mesh.facet_attrs[static_cast<std::size_t>(e) * 2 * dim + 2 * a + 1] = 2 + 2 * a;
          }
        }
        for (int node = 0; node < nn; node++)
        {
          int r = node;
          for (int a = 0; a < dim; a++)
          {
            const int i = r % n1;
            r /= n1;
            const double t = 0.5 * (gll[i] + 1.0);
            const double lo = bounds[a][0] + ei[a] * h[a];
            // Snap the element end to the next element start so shared facets agree bitwise.
            const double hi = (ei[a] + 1 == counts[a]) ? bounds[a][1]
                                                        : bounds[a][0] + (ei[a] + 1) * h[a];
            double x = lo + t * (hi - lo);
            if (i == 0)
            {
              x = lo;
            }
            else if (i == geom_degree)
            {
              x = hi;
            }
            mesh.geom_nodes[(static_cast<std::size_t>(e) * nn + node) * dim + a] = x;
          }
        }
      }
    }
  }
  BuildTopology(mesh);
  return mesh;
}

void EvalElementMap(const MacroMesh &mesh, int e, const Point &xi, Point &x,
                    std::array<double, 9> &J)
{
  const int d = mesh.dim;
  const int n1 = mesh.geom_degree + 1;
  const auto nodes = GaussLobatto(mesh.geom_degree).points;
  std::array<DenseMatrix, 3> B, D;
  for (int a = 0; a < d; a++)
  {
    const double pt = xi[a];
    LagrangeMatrices(nodes, std::span<const double>(&pt, 1), B[a], D[a]);
  }
  x = {0.0, 0.0, 0.0};
  J.fill(0.0);
  const auto X = mesh.ElementNodes(e);
  const int nn = mesh.NodesPerElement();
  for (int node = 0; node < nn; node++)
  {
    std::array<int, 3> idx{0, 0, 0};
    int r = node;
    for (int a = 0; a < d; a++)
    {
      idx[a] = r % n1;
      r /= n1;
    }
    double val = 1.0;
    std::array<double, 3> grad{1.0, 1.0, 1.0};
    for (int a = 0; a < d; a++)
    {
      val *= B[a](0, idx[a]);
      for (int b = 0; b < d; b++)
      {
        grad[b] *= (a == b) ? D[a](0, idx[a]) : B[a](0, idx[a]);
      }
    }
    for (int c = 0; c < d; c++)
    {
      const double Xc = X[static_cast<std::size_t>(node) * d + c];
      x[c] += val * Xc;
      for (int b = 0; b < d; b++)
      {
        J[c * 3 + b] += grad[b] * Xc;
      }
    }
  }
}

std::vector<double> LatticeCoordinates(const MacroMesh &mesh, int p)
{
  Require(p >= 1, "LatticeCoordinates: degree must be at least 1");
  const int d = mesh.dim, ng = mesh.geom_degree + 1, nl = p + 1;
  const int nn = mesh.NodesPerElement(), nv = IPow(nl, d);
  DenseMatrix B, D;
  LagrangeMatrices(GaussLobatto(mesh.geom_degree).points, GaussLobatto(p).points, B, D);
  std::vector<double> out(static_cast<std::size_t>(mesh.n_el) * nv * d);
  const std::array<const DenseMatrix *, 3> M{&B, &B, &B};
  const int wsize = IPow(std::max(ng, nl), d);
  ParallelFor(mesh.n_el, [&](long e)
              {
                std::vector<double> xin(nn), xout(nv), w1(wsize), w2(wsize);
                const auto X = mesh.ElementNodes(static_cast<int>(e));
                for (int c = 0; c < d; c++)
                {
                  for (int k = 0; k < nn; k++)
                  {
                    xin[k] = X[k * d + c];
                  }
                  TensorContract(d, M, false, xin.data(), {ng, ng, ng}, xout.data(), w1.data(),
                                 w2.data());
                  for (int k = 0; k < nv; k++)
                  {
                    out[(static_cast<std::size_t>(e) * nv + k) * d + c] = xout[k];
                  }
                }
              });
  return out;
}

namespace
{

double Det(int d, const std::array<double, 9> &J)
{
  if (d == 2)
  {
    return J[0] * J[4] - J[1] * J[3];
  }
  return J[0] * (J[4] * J[8] - J[5] * J[7]) - J[1] * (J[3] * J[8] - J[5] * J[6]) +
         J[2] * (J[3] * J[7] - J[4] * J[6]);
}

}  // namespace

void CheckJacobians(const MacroMesh &mesh)
{
  const int d = mesh.dim;
  const int n1 = mesh.geom_degree + 1;
  const auto nodes = GaussLobatto(mesh.geom_degree).points;
  const int nn = mesh.NodesPerElement();
  for (int e = 0; e < mesh.n_el; e++)
  {
    for (int node = 0; node < nn; node++)
    {
      Point xi{0.0, 0.0, 0.0};
      int r = node;
      for (int a = 0; a < d; a++)
      {
        xi[a] = nodes[r % n1];
        r /= n1;
      }
      Point x;
      std::array<double, 9> J;
      EvalElementMap(mesh, e, xi, x, J);
      const double det = Det(d, J);
      if (!(det > 0.0))
      {
        std::ostringstream msg;
        msg << "degenerate geometry: det J = " << det << " in element " << e << " at node "
            << node;
        throw DegenerateGeometryError(msg.str());
      }
    }
  }
}

MacroMesh CurveMesh(const MacroMesh &mesh, const std::function<Point(const Point &)> &map)
{
  MacroMesh out = mesh;
  const int d = mesh.dim;
  const std::size_t n = out.geom_nodes.size() / d;
  for (std::size_t i = 0; i < n; i++)
  {
    Point x{0.0, 0.0, 0.0};
    for (int c = 0; c < d; c++)
    {
      x[c] = out.geom_nodes[i * d + c];
    }
    const Point y = map(x);
    for (int c = 0; c < d; c++)
    {
      out.geom_nodes[i * d + c] = y[c];
    }
  }
  CheckJacobians(out);
  return out;
}

MacroMesh RenumberVertices(const MacroMesh &mesh, std::span<const int> perm)
{
  Require(static_cast<int>(perm.size()) == mesh.n_vertices,
          "RenumberVertices: permutation size mismatch");
  std::vector<char> seen(mesh.n_vertices, 0);
  for (int v : perm)
  {
    Require(v >= 0 && v < mesh.n_vertices && !seen[v], "RenumberVertices: not a permutation");
    seen[v] = 1;
  }
  MacroMesh out = mesh;
  for (auto &v : out.elem_vertices)
  {
    v = perm[v];
  }
  BuildTopology(out);
  return out;
}

void WriteVtkMacroMesh(const MacroMesh &mesh, const std::string &path)
{
  std::ofstream os(path);
  Require(os.good(), "WriteVtkMacroMesh: cannot open " + path);
  const int d = mesh.dim, nc = mesh.NumCorners();
  const int pg = mesh.geom_degree, n1 = pg + 1;
  os << "# vtk DataFile Version 3.0\nmacro mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << mesh.n_el * nc << " double\n";
  os.precision(17);
  for (int e = 0; e < mesh.n_el; e++)
  {
    const auto X = mesh.ElementNodes(e);
    for (int c = 0; c < nc; c++)
    {
      int node = 0, stride = 1;
      for (int a = 0; a < d; a++)
      {
        node += ((c >> a) & 1) * pg * stride;
        stride *= n1;
      }
      for (int a = 0; a < 3; a++)
      {
        os << (a < d ? X[static_cast<std::size_t>(node) * d + a] : 0.0) << (a < 2 ? " " : "\n");
      }
    }
  }
  // VTK orders quad/hex corners counterclockwise.
  const int order2[4] = {0, 1, 3, 2};
  const int order3[8] = {0, 1, 3, 2, 4, 5, 7, 6};
  os << "CELLS " << mesh.n_el << " " << mesh.n_el * (nc + 1) << "\n";
  for (int e = 0; e < mesh.n_el; e++)
  {
    os << nc;
    for (int c = 0; c < nc; c++)
    {
      os << " " << e * nc + (d == 2 ? order2[c] : order3[c]);
    }
    os << "\n";
  }
  os << "CELL_TYPES " << mesh.n_el << "\n";
  for (int e = 0; e < mesh.n_el; e++)
  {
    os << (d == 2 ? 9 : 12) << "\n";
  }
}

std::array<int, 3> LorTopology::Shape(SubEntity kind, int axis) const
{
  std::array<int, 3> s{1, 1, 1};
  for (int a = 0; a < dim; a++)
  {
    switch (kind)
    {
      case SubEntity::Vertex:
        s[a] = p + 1;
        break;
      case SubEntity::Element:
        s[a] = p;
        break;
      case SubEntity::Edge:
        s[a] = (a == axis) ? p : p + 1;
        break;
      case SubEntity::Face:
        s[a] = (a == axis) ? p + 1 : p;
        break;
    }
  }
  return s;
}

int LorTopology::Count(SubEntity kind, int axis) const
{
  const auto s = Shape(kind, axis);
  return s[0] * s[1] * s[2];
}

int LorTopology::CountAll(SubEntity kind) const
{
  if (kind == SubEntity::Vertex || kind == SubEntity::Element)
  {
    return Count(kind);
  }
  int n = 0;
  for (int a = 0; a < dim; a++)
  {
    n += Count(kind, a);
  }
  return n;
}

int LorTopology::Index(SubEntity kind, int axis, std::array<int, 3> mi) const
{
  const bool directional = (kind == SubEntity::Edge || kind == SubEntity::Face);
  Require(!directional || (axis >= 0 && axis < dim), "LorTopology: invalid axis");
  const auto s = Shape(kind, directional ? axis : 0);
  for (int a = 0; a < 3; a++)
  {
    const int lim = (a < dim) ? s[a] : 1;
    Require(mi[a] >= 0 && mi[a] < lim, "LorTopology: multi-index out of range");
  }
  int offset = 0;
  if (directional)
  {
    for (int a = 0; a < axis; a++)
    {
      offset += Count(kind, a);
    }
  }
  return offset + mi[0] + s[0] * (mi[1] + s[1] * mi[2]);
}

std::pair<int, std::array<int, 3>> LorTopology::MultiIndex(SubEntity kind, int index) const
{
  const bool directional = (kind == SubEntity::Edge || kind == SubEntity::Face);
  Require(index >= 0 && index < CountAll(kind), "LorTopology: index out of range");
  int axis = 0;
  if (directional)
  {
    while (index >= Count(kind, axis))
    {
      index -= Count(kind, axis);
      axis++;
    }
  }
  const auto s = Shape(kind, axis);
  std::array<int, 3> mi{index % s[0], (index / s[0]) % s[1], index / (s[0] * s[1])};
  return {axis, mi};
}

}  // namespace lor
