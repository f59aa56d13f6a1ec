//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file dual.hpp  Fixed-width forward-mode dual numbers.
//
// Numeric kernels that need exact small Jacobians (swing-twist angles w.r.t.
// an axis-angle, rotation matrices w.r.t. their parameters, the chair
// descriptor w.r.t. the latent) are templated on the scalar type and
// instantiated with Dual<N>. Value semantics mirror double; derivative parts
// propagate by the chain rule.
//---------------------------------------------------------------------------//
#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace sitfit
{

template <int N>
struct Dual
{
    using Grad = Eigen::Matrix<double, N, 1>;

    double v{0};
    Grad d{Grad::Zero()};

    Dual() = default;
    Dual(double value) : v(value) {}
    Dual(double value, Grad const& grad) : v(value), d(grad) {}

    //! Seed variable i with unit derivative.
    static Dual var(double value, int i)
    {
        Dual r(value);
        r.d[i] = 1.0;
        return r;
    }

    Dual operator-() const { return {-v, -d}; }

    Dual& operator+=(Dual const& o)
    {
        v += o.v;
        d += o.d;
        return *this;
    }
    Dual& operator-=(Dual const& o)
    {
        v -= o.v;
        d -= o.d;
        return *this;
    }
    Dual& operator*=(Dual const& o)
    {
        d = d * o.v + o.d * v;
        v *= o.v;
        return *this;
    }
    Dual& operator/=(Dual const& o)
    {
        d = (d * o.v - o.d * v) / (o.v * o.v);
        v /= o.v;
        return *this;
    }
};

template <int N>
Dual<N> operator+(Dual<N> a, Dual<N> const& b)
{
    return a += b;
}
template <int N>
Dual<N> operator-(Dual<N> a, Dual<N> const& b)
{
    return a -= b;
}
template <int N>
Dual<N> operator*(Dual<N> a, Dual<N> const& b)
{
    return a *= b;
}
template <int N>
Dual<N> operator/(Dual<N> a, Dual<N> const& b)
{
    return a /= b;
}

template <int N>
bool operator<(Dual<N> const& a, Dual<N> const& b)
{
    return a.v < b.v;
}
template <int N>
bool operator>(Dual<N> const& a, Dual<N> const& b)
{
    return a.v > b.v;
}
template <int N>
bool operator<=(Dual<N> const& a, Dual<N> const& b)
{
    return a.v <= b.v;
}
template <int N>
bool operator>=(Dual<N> const& a, Dual<N> const& b)
{
    return a.v >= b.v;
}
template <int N>
bool operator==(Dual<N> const& a, Dual<N> const& b)
{
    return a.v == b.v;
}
template <int N>
bool operator!=(Dual<N> const& a, Dual<N> const& b)
{
    return a.v != b.v;
}

template <int N>
Dual<N> sqrt(Dual<N> const& a)
{
    double s = std::sqrt(a.v);
    return {s, a.d * (0.5 / s)};
}
template <int N>
Dual<N> sin(Dual<N> const& a)
{
    return {std::sin(a.v), a.d * std::cos(a.v)};
}
template <int N>
Dual<N> cos(Dual<N> const& a)
{
    return {std::cos(a.v), a.d * (-std::sin(a.v))};
}
template <int N>
Dual<N> exp(Dual<N> const& a)
{
    double e = std::exp(a.v);
    return {e, a.d * e};
}
template <int N>
Dual<N> log(Dual<N> const& a)
{
    return {std::log(a.v), a.d / a.v};
}
template <int N>
Dual<N> abs(Dual<N> const& a)
{
    return a.v < 0 ? -a : a;
}
template <int N>
Dual<N> atan2(Dual<N> const& y, Dual<N> const& x)
{
    double den = x.v * x.v + y.v * y.v;
    return {std::atan2(y.v, x.v), (y.d * x.v - x.d * y.v) / den};
}
//! min/max propagate the subgradient of the achieving argument.
template <int N>
Dual<N> min(Dual<N> const& a, Dual<N> const& b)
{
    return a.v <= b.v ? a : b;
}
template <int N>
Dual<N> max(Dual<N> const& a, Dual<N> const& b)
{
    return a.v >= b.v ? a : b;
}

// Plain-double fallbacks so templated kernels compile for both scalar types.
using std::abs;
using std::atan2;
using std::cos;
using std::exp;
using std::log;
using std::max;
using std::min;
using std::sin;
using std::sqrt;

}  // namespace sitfit

namespace Eigen
{
//! Scalar traits so fixed-size Eigen matrices can hold dual numbers.
template <int N>
struct NumTraits<sitfit::Dual<N>> : NumTraits<double>
{
    using Real = sitfit::Dual<N>;
    using NonInteger = sitfit::Dual<N>;
    using Nested = sitfit::Dual<N>;
    using Literal = double;
    enum
    {
        IsComplex = 0,
        IsInteger = 0,
        IsSigned = 1,
        RequireInitialization = 1,
        ReadCost = 1,
        AddCost = 1 + N,
        MulCost = 2 * (1 + N),
    };
};
}  // namespace Eigen
