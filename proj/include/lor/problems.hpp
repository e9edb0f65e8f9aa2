// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>
#include "lor/basis.hpp"

namespace lor
{

enum class Problem
{
  Poisson,    // -div grad u = f, homogeneous Dirichlet, u = prod sin(pi x_a)
  Helmholtz,  // -div grad u + u = f (definite)
  CurlCurl,   // curl curl E + E = f in ND, n x E = 0
  DivDiv,     // -grad div F + F = f in RT, F . n = 0
  AmrLayer,   // 2D Poisson with an inner layer on a 1-irregular nonconforming mesh
  MagDiff     // 3D A-phi magnetic diffusion on a box coil
};

enum class Preconditioner
{
  LorAmg,
  LorCholesky,
  Jacobi,
  None
};

Problem ParseProblem(const std::string &name);
const char *ProblemName(Problem p);
Preconditioner ParsePreconditioner(const std::string &name);
const char *PreconditionerName(Preconditioner p);

struct RunConfig
{
  Problem problem = Problem::Poisson;
  std::array<int, 3> mesh{4, 4, 1};
  int dim = 2;
  int p_min = 2, p_max = 2;
  Preconditioner precond = Preconditioner::LorAmg;
  int q = 0;  // quadrature points per direction; 0 selects p + 2
  double rel_tol = 1e-12;
  double abs_tol = 0.0;
  int max_iters = 1000;
  int threads = 0;  // 0 keeps the current setting
  bool deterministic = false;
  OpenBasis open_basis = OpenBasis::Histopolation;
  int amr_levels = 2;
  // Lanczos steps for the spectral estimate of B^-1 A on the free DOFs (lor-cholesky only);
  // 0 disables it.
  int lanczos_iters = 0;
  std::string vtk_path;  // H1 problems only; empty disables output

  // Throws std::invalid_argument if a field is out of range.
  void Validate() const;
};

// One CSV row. Times in seconds; all zero in deterministic mode.
struct RunResult
{
  std::string problem;
  int dim = 2;
  int p = 1;
  long ndofs = 0;
  long nnz = 0;
  int iters = 0;
  double kappa_est = 1.0;
  double t_ho_setup = 0.0;
  double t_lor_asm = 0.0;
  double t_amg_setup = 0.0;
  double t_ho_apply = 0.0;
  double t_prec_apply = 0.0;
  double t_total = 0.0;
  bool converged = false;

  // Diagnostics not written to the CSV.
  double l2_error = -1.0;        // H1 problems with a known solution
  double nnz_per_row = 0.0;      // LOR matrix, before boundary elimination
  int max_interior_row_nnz = 0;  // LOR matrix, rows away from the boundary
  double lambda_min = 1.0, lambda_max = 1.0;
  double lanczos_kappa = -1.0;  // when requested
  double complex_residual = -1.0;  // magdiff: max |C G phi|
  double flux_imbalance = -1.0;    // magdiff: max |div_h B| / max |B|
};

// An error raised in one phase of a run, with the phase name prepended to the message.
class PhaseError : public std::runtime_error
{
public:
  PhaseError(const std::string &phase, const std::string &msg)
      : std::runtime_error(phase + ": " + msg), phase_(phase)
  {
  }
  const std::string &Phase() const { return phase_; }

private:
  std::string phase_;
};

// Run at a single p. The A-phi problem yields two rows (potential and vector potential).
std::vector<RunResult> RunProblem(const RunConfig &cfg, int p);
// Run every p in [p_min, p_max].
std::vector<RunResult> RunSweep(const RunConfig &cfg);

extern const char *const kCsvHeader;
std::string CsvRow(const RunResult &r);
void WriteCsv(std::ostream &out, const std::vector<RunResult> &rows);

// Parsed CSV row with the phase-time fractions of the total.
struct ReportRow
{
  RunResult run;
  double f_ho_setup = 0.0, f_lor_asm = 0.0, f_amg_setup = 0.0, f_ho_apply = 0.0,
         f_prec_apply = 0.0, f_other = 0.0;
};

class CsvParseError : public std::runtime_error
{
public:
  CsvParseError(int line, const std::string &msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line)
  {
  }
  int Line() const { return line_; }

private:
  int line_;
};

std::vector<ReportRow> ParseResultsCsv(std::istream &in);
// Plain-text table and CSV of the per-phase fractions.
void EmitReport(const std::vector<ReportRow> &rows, std::ostream &text, std::ostream *csv);

}  // namespace lor
