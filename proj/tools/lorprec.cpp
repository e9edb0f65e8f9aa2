// SPDX-License-Identifier: Apache-2.0
//
// lorprec: batch driver for LOR-preconditioned high-order solves.
//
//   lorprec run --problem helmholtz --mesh 8x8 --p 2:8 --precond lor-cholesky --out run.csv
//   lorprec report run.csv --out fractions.csv
//
// Exit status: 0 on success, 2 if any solve did not converge, 1 on error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <fmt/format.h>
#include "lor/problems.hpp"

namespace
{

std::array<int, 3> ParseMesh(const std::string &s, int &dim)
{
  std::array<int, 3> n{1, 1, 1};
  dim = 0;
  std::size_t pos = 0;
  while (pos <= s.size())
  {
    const std::size_t next = s.find('x', pos);
    const std::string tok = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    if (dim == 3 || tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    {
      throw std::invalid_argument("--mesh must look like NxM or NxMxK, got '" + s + "'");
    }
    n[dim++] = std::stoi(tok);
    if (next == std::string::npos)
    {
      break;
    }
    pos = next + 1;
  }
  if (dim < 2)
  {
    throw std::invalid_argument("--mesh must look like NxM or NxMxK, got '" + s + "'");
  }
  return n;
}

void ParseDegrees(const std::string &s, int &lo, int &hi)
{
  const auto colon = s.find(':');
  try
  {
    std::size_t used = 0;
    lo = std::stoi(s.substr(0, colon), &used);
    if (used != (colon == std::string::npos ? s.size() : colon))
    {
      throw std::invalid_argument("");
    }
    hi = lo;
    if (colon != std::string::npos)
    {
      const std::string rest = s.substr(colon + 1);
      hi = std::stoi(rest, &used);
      if (used != rest.size())
      {
        throw std::invalid_argument("");
      }
    }
  }
  catch (const std::exception &)
  {
    throw std::invalid_argument("--p must be an integer or a range P:Q, got '" + s + "'");
  }
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"LOR preconditioning of high-order finite element problems"};
  app.require_subcommand(1);

  auto *run = app.add_subcommand("run", "Solve a problem and write one CSV row per run");
  std::string problem = "poisson", mesh = "4x4", degrees = "2", precond = "lor-amg";
  std::string out_path, vtk_path, basis = "histopolation";
  double tol = -1.0, abs_tol = -1.0;
  int threads = 0, q = 0, max_iters = 1000, amr_levels = 2, lanczos = 0;
  bool deterministic = false;
  run->add_option("--problem", problem, "poisson, helmholtz, curlcurl, divdiv, amr-layer or magdiff");
  run->add_option("--mesh", mesh, "Macro-element counts, NxM or NxMxK");
  run->add_option("--p", degrees, "Polynomial degree or range P:Q");
  run->add_option("--precond", precond, "lor-amg, lor-cholesky, jacobi or none");
  run->add_option("--tol", tol, "Relative residual tolerance (1e-12; 1e-8 for magdiff)");
  run->add_option("--abs-tol", abs_tol, "Absolute residual tolerance (0; 1e-8 for magdiff)");
  run->add_option("--max-iters", max_iters, "CG iteration limit");
  run->add_option("--q", q, "Quadrature points per direction (0: p + 2)");
  run->add_option("--threads", threads, "Thread count (0: runtime default)");
  run->add_flag("--deterministic", deterministic, "Zero all timings for reproducible output");
  run->add_option("--out", out_path, "CSV file (appended to if it exists); stdout if omitted");
  run->add_option("--vtk", vtk_path, "VTK file for the solution (scalar problems)");
  run->add_option("--amr-levels", amr_levels, "Refinement levels around the inner layer");
  run->add_option("--lanczos", lanczos, "Lanczos steps for a spectral estimate (lor-cholesky)");
  run->add_option("--basis", basis, "Open basis for vector spaces: histopolation or nodal");

  auto *report = app.add_subcommand("report", "Summarize the phase times of a results CSV");
  std::string in_path, report_out;
  report->add_option("csv", in_path, "Results CSV")->required();
  report->add_option("--out", report_out, "Write the fractions as CSV");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp &e)
  {
    return app.exit(e);
  }
  catch (const CLI::ParseError &e)
  {
    app.exit(e);
    return 1;
  }

  try
  {
    if (*run)
    {
      lor::RunConfig cfg;
      cfg.problem = lor::ParseProblem(problem);
      cfg.mesh = ParseMesh(mesh, cfg.dim);
      ParseDegrees(degrees, cfg.p_min, cfg.p_max);
      cfg.precond = lor::ParsePreconditioner(precond);
      const bool magdiff = cfg.problem == lor::Problem::MagDiff;
      cfg.rel_tol = tol >= 0.0 ? tol : (magdiff ? 1e-8 : 1e-12);
      cfg.abs_tol = abs_tol >= 0.0 ? abs_tol : (magdiff ? 1e-8 : 0.0);
      cfg.max_iters = max_iters;
      cfg.q = q;
      cfg.threads = threads;
      cfg.deterministic = deterministic;
      cfg.amr_levels = amr_levels;
      cfg.vtk_path = vtk_path;
      cfg.lanczos_iters = lanczos;
      if (basis == "nodal")
      {
        cfg.open_basis = lor::OpenBasis::Nodal;
      }
      else if (basis != "histopolation")
      {
        throw std::invalid_argument("--basis must be histopolation or nodal");
      }
      cfg.Validate();

      const auto rows = lor::RunSweep(cfg);
      bool all_converged = true;
      for (const auto &r : rows)
      {
        all_converged = all_converged && r.converged;
      }
      if (out_path.empty())
      {
        lor::WriteCsv(std::cout, rows);
      }
      else
      {
        bool has_header = false;
        if (std::filesystem::exists(out_path) && std::filesystem::file_size(out_path) > 0)
        {
          std::ifstream existing(out_path);
          std::string first;
          std::getline(existing, first);
          if (first != lor::kCsvHeader)
          {
            throw std::invalid_argument("existing file " + out_path + " has a different header");
          }
          has_header = true;
        }
        std::ofstream out(out_path, std::ios::app);
        if (!out)
        {
          throw std::invalid_argument("cannot open " + out_path);
        }
        if (!has_header)
        {
          out << lor::kCsvHeader << "\n";
        }
        for (const auto &r : rows)
        {
          out << lor::CsvRow(r) << "\n";
          std::cout << fmt::format("{} dim={} p={} ndofs={} nnz={} iters={} kappa={:.4f}{}{}{}\n",
                                   r.problem, r.dim, r.p, r.ndofs, r.nnz, r.iters, r.kappa_est,
                                   r.lanczos_kappa > 0.0 ? fmt::format(" lanczos_kappa={:.4f}", r.lanczos_kappa) : "",
                                   r.l2_error >= 0.0 ? fmt::format(" l2_error={:.3e}", r.l2_error) : "",
                                   r.converged ? "" : " NOT CONVERGED");
        }
      }
      return all_converged ? 0 : 2;
    }
    std::ifstream in(in_path);
    if (!in)
    {
      throw std::invalid_argument("cannot open " + in_path);
    }
    const auto rows = lor::ParseResultsCsv(in);
    if (report_out.empty())
    {
      lor::EmitReport(rows, std::cout, nullptr);
    }
    else
    {
      std::ofstream csv(report_out);
      if (!csv)
      {
        throw std::invalid_argument("cannot open " + report_out);
      }
      lor::EmitReport(rows, std::cout, &csv);
    }
    return 0;
  }
  catch (const std::exception &e)
  {
    std::cerr << "lorprec: error: " << e.what() << "\n";
    return 1;
  }
}
