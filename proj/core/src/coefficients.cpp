#include "cmg/coefficients.hpp"

#include "cmg/errors.hpp"

#include <cmath>

namespace cmg {

CoefficientSet CoefficientSet::laplace() {
    CoefficientSet c;
    c.diffusion = [](double, double) { return std::array<double, 4>{1.0, 0.0, 0.0, 1.0}; };
    c.potential = [](double, double) { return 0.0; };
    c.density = [](double, double) { return 1.0; };
    return c;
}

CoefficientSet CoefficientSet::example2() {
    CoefficientSet c;
    c.diffusion = [](double x, double y) {
        const double u = x - 0.5;
        const double v = y - 0.5;
        return std::array<double, 4>{1.0 + u * u, u * v, u * v, 1.0 + v * v};
    };
    c.potential = [](double x, double y) { return std::exp((x - 0.5) * (y - 0.5)); };
    c.density = [](double x, double y) { return 1.0 + (x - 0.5) * (y - 0.5); };
    return c;
}

CoefficientSet CoefficientSet::by_name(const std::string& name) {
    if (name == "laplace") return laplace();
    if (name == "example2") return example2();
    throw ConfigError("unknown coefficient set `" + name + "` (expected laplace or example2)");
}

} // namespace cmg
