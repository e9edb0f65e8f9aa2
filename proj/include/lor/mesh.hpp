// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <functional>
#include <set>
#include <span>
#include <vector>
#include "lor/common.hpp"

namespace lor
{

// Coarse tensor-product mesh of macro elements (quadrilaterals or hexahedra).
//
// Local conventions, used throughout the library:
//   - corners are numbered lexicographically, v = bx + 2 by + 4 bz;
//   - local edges are axis-major: edge = a 2^(d-1) + (bit of the lower remaining axis) +
//     2 (bit of the higher remaining axis), directed along +a;
//   - local facets are numbered 2 a + side;
//   - every element's reference axes are aligned with the global structured axes.
//
// Global edges are oriented from the lower to the higher global vertex index.
struct MacroMesh
{
  int dim = 2;
  std::array<int, 3> extents{0, 0, 0};  // structured root grid; zero if not structured
  int n_el = 0;
  int geom_degree = 1;

  // Geometry nodes at the tensor Gauss-Lobatto points of degree geom_degree, E-vector
  // layout: index (e * NodesPerElement() + node) * dim + component.
  std::vector<double> geom_nodes;

  int n_vertices = 0;
  std::vector<int> elem_vertices;                // [e][2^d]
  int n_edges = 0;
  std::vector<int> elem_edges;                   // [e][d 2^(d-1)]
  std::vector<std::array<int, 2>> edge_vertices; // oriented (lower id, higher id)
  int n_faces = 0;                               // 3D only
  std::vector<int> elem_faces;                   // [e][6], 3D only
  std::vector<int> attributes;                   // element attributes, 1-based
  std::vector<int> facet_attrs;                  // [e][2d], boundary attribute or 0

  int NumCorners() const { return 1 << dim; }
  int NumLocalEdges() const { return dim * (1 << (dim - 1)); }
  int NumLocalFacets() const { return 2 * dim; }
  int NodesPerElement() const { return IPow(geom_degree + 1, dim); }
  std::span<const double> ElementNodes(int e) const
  {
    const std::size_t n = static_cast<std::size_t>(NodesPerElement()) * dim;
    return {geom_nodes.data() + e * n, n};
  }
  bool Structured() const { return extents[0] > 0; }
};

// Local-edge helpers for the conventions above.
int LocalEdgeAxis(int dim, int edge);
std::array<int, 2> LocalEdgeCorners(int dim, int edge);
int LocalEdgeIndex(int dim, int axis, int corner_of_start);
std::array<int, 4> LocalFaceCorners(int face);  // 3D, lexicographic in the face plane

// Fill edge and face tables from elem_vertices.
void BuildTopology(MacroMesh &mesh);

// Axis-aligned box mesh. Boundary attribute of the facet on side s of axis a is 1 + 2a + s.
MacroMesh MakeCartesian(int dim, std::array<int, 3> counts,
                        std::array<std::array<double, 2>, 3> bounds, int geom_degree);

// Apply a smooth coordinate map to the geometry nodes. Throws DegenerateGeometryError if the
// Jacobian determinant is not positive at every Gauss-Lobatto node.
MacroMesh CurveMesh(const MacroMesh &mesh, const std::function<Point(const Point &)> &map);

// Replace global vertex numbers: new id of vertex v is perm[v]. Edge and face tables are
// rebuilt, which flips edge orientations where the relative order of endpoints changes.
MacroMesh RenumberVertices(const MacroMesh &mesh, std::span<const int> perm);

// Physical point and Jacobian of element e at reference point xi in [-1, 1]^d, by direct
// Lagrange evaluation (not sum factorized).
void EvalElementMap(const MacroMesh &mesh, int e, const Point &xi, Point &x,
                    std::array<double, 9> &J);

// Coordinates of the degree-p Gauss-Lobatto lattice (the LOR subvertices) of every element,
// E-vector layout [(e * (p+1)^d + k) * dim + c], by sum factorization from the geometry nodes.
std::vector<double> LatticeCoordinates(const MacroMesh &mesh, int p);

// Check det J > 0 at all Gauss-Lobatto geometry nodes.
void CheckJacobians(const MacroMesh &mesh);

// 2D nonconforming quadtree refinement of a structured base mesh.
struct NcLeaf
{
  int root = 0;
  int level = 0;
  int ix = 0, iy = 0;  // position of the leaf inside its root at the given level
};

struct MasterSlaveEdge
{
  int master_edge = -1;
  int master_elem = -1;
  int hanging_vertex = -1;
  std::array<int, 2> slave_edges{-1, -1};
  std::array<int, 2> slave_elems{-1, -1};
  // Master parameter t in [0, 1] (master orientation) of the start and end of each slave
  // edge, both measured along the slave's own global orientation.
  std::array<std::array<double, 2>, 2> slave_t{};
};

struct NcMesh2D
{
  MacroMesh base;
  std::vector<NcLeaf> leaves;
  MacroMesh leaf_mesh;  // leaf elements; attributes and facet attributes inherited
  std::vector<MasterSlaveEdge> master_slave_edges;

  int MaxLevel() const;
};

NcMesh2D MakeNcMesh(const MacroMesh &base);
NcMesh2D RefineNonconforming(const MacroMesh &mesh, const std::set<int> &marks);
NcMesh2D RefineNonconforming(const NcMesh2D &nc, const std::set<int> &marks);

// Implicit topology of the low-order-refined mesh inside one macro element.
enum class SubEntity
{
  Vertex,
  Edge,    // directed along `axis`
  Face,    // normal to `axis` (edges in 2D)
  Element
};

struct LorTopology
{
  int dim = 2;
  int p = 1;

  int NumVertices() const { return IPow(p + 1, dim); }
  int NumElements() const { return IPow(p, dim); }
  // Shape of the lattice of the given entity kind/axis.
  std::array<int, 3> Shape(SubEntity kind, int axis = 0) const;
  int Count(SubEntity kind, int axis = 0) const;
  int CountAll(SubEntity kind) const;
  // Lexicographic local index, with edges/faces offset by axis (axis-major).
  int Index(SubEntity kind, int axis, std::array<int, 3> mi) const;
  // Inverse: returns axis and multi-index.
  std::pair<int, std::array<int, 3>> MultiIndex(SubEntity kind, int index) const;
};

// Legacy ASCII VTK output of a macro mesh, cells drawn with their corner vertices.
void WriteVtkMacroMesh(const MacroMesh &mesh, const std::string &path);

}  // namespace lor
