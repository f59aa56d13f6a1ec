//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
#include "sitfit/parallel.hpp"

#include <algorithm>

#ifdef _OPENMP
#    include <omp.h>
#endif

namespace sitfit
{

int resolve_jobs(int jobs)
{
    if (jobs > 0)
        return jobs;
#ifdef _OPENMP
    return std::max(1, omp_get_max_threads());
#else
    return 1;
#endif
}

double blocked_sum_serial(std::size_t n,
                          std::function<double(std::size_t)> const& f)
{
    std::size_t const nblocks = (n + kReduceBlock - 1) / kReduceBlock;
    double total = 0.0;
    for (std::size_t b = 0; b < nblocks; ++b)
    {
        double part = 0.0;
        std::size_t const end = std::min(n, (b + 1) * kReduceBlock);
        for (std::size_t i = b * kReduceBlock; i < end; ++i)
            part += f(i);
        total += part;
    }
    return total;
}

double blocked_sum(std::size_t n,
                   std::function<double(std::size_t)> const& f,
                   int jobs)
{
    int const nthreads = resolve_jobs(jobs);
    if (nthreads <= 1 || n <= kReduceBlock)
        return blocked_sum_serial(n, f);

    std::size_t const nblocks = (n + kReduceBlock - 1) / kReduceBlock;
    std::vector<double> partials(nblocks, 0.0);
#ifdef _OPENMP
#    pragma omp parallel for schedule(static) num_threads(nthreads)
#endif
    for (long long b = 0; b < static_cast<long long>(nblocks); ++b)
    {
        double part = 0.0;
        std::size_t const lo = static_cast<std::size_t>(b) * kReduceBlock;
        std::size_t const end = std::min(n, lo + kReduceBlock);
        for (std::size_t i = lo; i < end; ++i)
            part += f(i);
        partials[static_cast<std::size_t>(b)] = part;
    }
    // Partials combine in block order: same association as the serial path.
    double total = 0.0;
    for (double p : partials)
        total += p;
    return total;
}

void parallel_for_serial(std::size_t n,
                         std::function<void(std::size_t)> const& f)
{
    for (std::size_t i = 0; i < n; ++i)
        f(i);
}

void parallel_for(std::size_t n,
                  std::function<void(std::size_t)> const& f,
                  int jobs)
{
    int const nthreads = resolve_jobs(jobs);
    if (nthreads <= 1 || n <= 1)
    {
        parallel_for_serial(n, f);
        return;
    }
#ifdef _OPENMP
#    pragma omp parallel for schedule(dynamic, 1) num_threads(nthreads)
#endif
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        f(static_cast<std::size_t>(i));
}

}  // namespace sitfit
