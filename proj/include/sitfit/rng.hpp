//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file rng.hpp  Counter-based deterministic random number generator.
//
// All randomness in the library flows from this generator. It is a splitmix64
// counter walk: the i-th raw draw is a pure function of (key, i), so forked
// sub-generators and per-task seeds are reproducible regardless of call
// interleaving or thread count.
//---------------------------------------------------------------------------//
#pragma once

#include <cmath>
#include <cstdint>

namespace sitfit
{

namespace detail
{
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}
}  // namespace detail

//! Derive a child seed from (seed, id); used for per-task streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t id)
{
    return detail::splitmix64(seed ^ detail::splitmix64(id + 0x51f17ull));
}

class Rng
{
  public:
    explicit Rng(std::uint64_t seed) : key_(detail::splitmix64(seed)) {}

    //! Fork an independent stream; deterministic in (this stream's key, id).
    Rng fork(std::uint64_t id) const
    {
        Rng r(0);
        r.key_ = derive_seed(key_, id);
        r.ctr_ = 0;
        return r;
    }

    std::uint64_t next_u64() { return detail::splitmix64(key_ + ++ctr_); }

    //! Uniform in [0, 1).
    double uniform()
    {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    //! Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    //! Standard normal via Box-Muller (consumes two uniforms, no caching).
    double normal()
    {
        double u1 = uniform();
        double u2 = uniform();
        // Guard the log singularity at u1 == 0.
        u1 = u1 > 0 ? u1 : 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1))
               * std::cos(6.283185307179586476925286766559 * u2);
    }

    //! Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n)
    {
        return n ? next_u64() % n : 0;
    }

  private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

}  // namespace sitfit
