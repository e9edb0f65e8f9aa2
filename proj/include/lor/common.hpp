// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <exception>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lor
{

using Vector = std::vector<double>;
using Point = std::array<double, 3>;

// Error types. Invalid arguments are reported with std::invalid_argument.

class DegenerateGeometryError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class NotSpdError : public std::runtime_error
{
public:
  NotSpdError(const std::string &msg, long pivot) : std::runtime_error(msg), pivot_(pivot) {}
  long Pivot() const { return pivot_; }

private:
  long pivot_;
};

class NotImplementedError : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

class IndefinitePreconditionerError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

inline void Require(bool cond, const std::string &msg)
{
  if (!cond)
  {
    throw std::invalid_argument(msg);
  }
}

// Scalar coefficient evaluated at a physical point inside an element with the given
// attribute. Piecewise-constant coefficients key off the attribute so that points on
// material interfaces take the value of the element being integrated.
struct Coefficient
{
  std::function<double(const Point &, int)> f;

  double operator()(const Point &x, int attr) const { return f(x, attr); }

  static Coefficient Constant(double c)
  {
    return {[c](const Point &, int) { return c; }};
  }
  static Coefficient ByAttribute(std::vector<double> values)
  {
    return {[values = std::move(values)](const Point &, int attr)
            { return values.at(static_cast<std::size_t>(attr - 1)); }};
  }
};

using VectorFunction = std::function<Point(const Point &)>;
using ScalarFunction = std::function<double(const Point &)>;

// Threading. All parallel loops in the library write disjoint outputs, so results do not
// depend on the thread count.
void SetNumThreads(int n);
int GetNumThreads();

template <typename F>
void ParallelFor(long n, F &&body)
{
#if defined(_OPENMP)
  // The exception from the lowest failing index is rethrown on the calling thread.
  std::exception_ptr error;
  long error_index = n;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; i++)
  {
    try
    {
      body(i);
    }
    catch (...)
    {
#pragma omp critical(lor_parallel_for_error)
      if (i < error_index)
      {
        error_index = i;
        error = std::current_exception();
      }
    }
  }
  if (error)
  {
    std::rethrow_exception(error);
  }
#else
  for (long i = 0; i < n; i++)
  {
    body(i);
  }
#endif
}

double Dot(std::span<const double> x, std::span<const double> y);
double Norm2(std::span<const double> x);

// Integer power for small exponents.
constexpr int IPow(int b, int e)
{
  int r = 1;
  for (int i = 0; i < e; i++)
  {
    r *= b;
  }
  return r;
}

}  // namespace lor
