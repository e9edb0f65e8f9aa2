// SPDX-License-Identifier: Apache-2.0

#include "lor/common.hpp"

#include <cmath>
#if defined(_OPENMP)
#include <omp.h>
#endif

namespace lor
{

void SetNumThreads(int n)
{
  Require(n >= 1, "SetNumThreads: thread count must be positive");
#if defined(_OPENMP)
  omp_set_num_threads(n);
#endif
}

int GetNumThreads()
{
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

double Dot(std::span<const double> x, std::span<const double> y)
{
  Require(x.size() == y.size(), "Dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); i++)
  {
    s += x[i] * y[i];
  }
  return s;
}

double Norm2(std::span<const double> x)
{
  return std::sqrt(Dot(x, x));
}

}  // namespace lor
