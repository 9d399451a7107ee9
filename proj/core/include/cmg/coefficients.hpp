#pragma once

#include <array>
#include <functional>
#include <string>

namespace cmg {

/// Coefficients of the operator -div(A grad u) + phi u with density rho on
/// the right-hand side. diffusion returns the 2x2 matrix row-major
/// {a11, a12, a21, a22}; it must be symmetric positive definite wherever the
/// quadrature evaluates it, and density strictly positive.
struct CoefficientSet {
    std::function<std::array<double, 4>(double, double)> diffusion;
    std::function<double(double, double)> potential;
    std::function<double(double, double)> density;

    /// A = I, phi = 0, rho = 1.
    static CoefficientSet laplace();

    /// Variable-coefficient problem on the unit square:
    ///   a11 = 1 + (x - 1/2)^2, a12 = a21 = (x - 1/2)(y - 1/2),
    ///   a22 = 1 + (y - 1/2)^2, phi = exp((x - 1/2)(y - 1/2)),
    ///   rho = 1 + (x - 1/2)(y - 1/2).
    static CoefficientSet example2();

    /// "laplace" or "example2"; throws ConfigError otherwise.
    static CoefficientSet by_name(const std::string& name);
};

} // namespace cmg
