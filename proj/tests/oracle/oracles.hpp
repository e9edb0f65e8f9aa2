// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations used by the tests.

#pragma once

#include <Eigen/Dense>
#include <vector>
#include "lor/lorasm.hpp"
#include "lor/pa.hpp"
#include "lor/spaces.hpp"
#include "lor/sparse.hpp"

namespace lor::oracle
{

// LOR matrix assembled by a global loop over all subelements of all macro elements, with
// DOFs identified by the coordinates of their subentities and oriented geometrically. The
// result is expressed in the numbering and orientation of `space`.
CsrMatrix UnstructuredLor(const FESpace &space, const Form &form, LorQuadrature quad);

// Number of (i, j) pairs of vertices of a structured grid with `cells` cells per axis that
// share a cell.
long GridGraphNnz(int dim, std::array<int, 3> cells);

Eigen::MatrixXd Dense(const CsrMatrix &A);

// Largest |A - B| over the union of the patterns.
double MaxDiff(const CsrMatrix &A, const CsrMatrix &B);

// Ruge-Stueben splitting with dense loops and measures recomputed from scratch each step.
std::vector<int> BruteForceRsSplitting(const Eigen::MatrixXd &A, double theta);

// Extreme generalized eigenvalues of A v = lambda B v (both SPD).
std::pair<double, double> GeneralizedExtremes(const Eigen::MatrixXd &A, const Eigen::MatrixXd &B);

// Dense matrix of a linear operator.
Eigen::MatrixXd DenseOperator(const LinearOperator &op, int n);

}  // namespace lor::oracle
