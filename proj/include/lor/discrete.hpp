// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>
#include "lor/spaces.hpp"
#include "lor/sparse.hpp"

namespace lor
{

// Reference macro-element incidence tables. edge_to_vertex[2 i + {0, 1}] are the local H1
// DOFs at the tail and head of local ND DOF i (both directed along +axis). In 3D,
// face_to_edge[4 f + k] and face_sign[4 f + k] give the four local ND DOFs bounding local RT
// DOF f and their circulation signs with respect to the +axis face normal.
struct TopoOpTables
{
  int dim = 2;
  int p = 1;
  std::vector<int> edge_to_vertex;
  std::vector<int> face_to_edge;
  std::vector<int> face_sign;
};

TopoOpTables BuildTopoOpTables(int dim, int p);

// Discrete gradient H1 -> ND: row i holds -s and +s at the tail and head vertices of edge i,
// with s the orientation sign of the edge.
CsrMatrix DiscreteGradient(const FESpace &h1, const FESpace &nd);

// 2D rotated gradient H1 -> RT, the discrete form of (-d/dy, d/dx).
CsrMatrix RotatedGradient2D(const FESpace &h1, const FESpace &rt);

// 3D discrete curl ND -> RT: four signed edges per face.
CsrMatrix DiscreteCurl3D(const FESpace &nd, const FESpace &rt);

// Coordinates of the LOR mesh vertices, one vector per dimension, indexed by the DOFs of an
// H1 space. Each DOF takes the value computed in its lowest-indexed macro element.
std::vector<Vector> LorVertexCoordinates(const FESpace &h1);

// Legacy ASCII VTK output of the LOR mesh with Q1 cells and optional point data (an H1
// L-vector).
void WriteVtkLor(const FESpace &h1, const std::string &path,
                 std::span<const double> point_data = {}, const std::string &name = "u");

}  // namespace lor
