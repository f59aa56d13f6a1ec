//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file parallel.hpp  OpenMP kernels with a canonical serial reference.
//
// Every parallel reduction in the library shares one fixed block association:
// values are summed left-to-right inside fixed-size blocks, then block
// partials are summed left-to-right. The serial reference and the OpenMP
// implementation therefore produce bit-identical doubles for any thread
// count, which is what makes --jobs a pure performance knob.
//---------------------------------------------------------------------------//
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace sitfit
{

//! Block width of the canonical reduction order.
inline constexpr std::size_t kReduceBlock = 256;

//! Threads to use for a requested job count (jobs <= 0 means "hardware").
int resolve_jobs(int jobs);

//! Serial reference: canonical blocked sum of f(0..n-1).
double blocked_sum_serial(std::size_t n, std::function<double(std::size_t)> const& f);

//! OpenMP implementation of the same association; bit-identical to serial.
double blocked_sum(std::size_t n,
                   std::function<double(std::size_t)> const& f,
                   int jobs);

//! Serial reference for an index loop.
void parallel_for_serial(std::size_t n,
                         std::function<void(std::size_t)> const& f);

//! OpenMP dynamic loop over independent tasks. Tasks must only write state
//! owned by their own index.
void parallel_for(std::size_t n,
                  std::function<void(std::size_t)> const& f,
                  int jobs);

}  // namespace sitfit
