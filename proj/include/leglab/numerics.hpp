#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <optional>

namespace leglab::num {

// Quintic smoothstep on [0, 1], clamped outside.
inline double smoothstep(double u)
{
    if (u <= 0.0)
        return 0.0;
    if (u >= 1.0)
        return 1.0;
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

inline double smoothstep_d(double u)
{
    if (u <= 0.0 || u >= 1.0)
        return 0.0;
    const double v = u * (1.0 - u);
    return 30.0 * v * v;
}

// Root of f on [a, b] given a sign change; exact zeros at the ends are returned as is.
template <typename F>
double bracketed_root(F f, double a, double b, double fa, double fb, int bits = 52)
{
    if (fa == 0.0)
        return a;
    if (fb == 0.0)
        return b;
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(
        f, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(bits), iters);
    return 0.5 * (r.first + r.second);
}

// Gauss-Legendre on [a, b], exact for polynomials up to degree 2N-1.
template <unsigned N = 10, typename F>
double gauss(F f, double a, double b)
{
    if (a == b)
        return 0.0;
    return boost::math::quadrature::gauss<double, N>::integrate(f, a, b);
}

inline double central_diff(auto f, double x, double h)
{
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace leglab::num
