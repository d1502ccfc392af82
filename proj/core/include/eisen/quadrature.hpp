#pragma once

#include <cstddef>
#include <vector>

namespace eisen {

struct QuadRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre rule on [a, b]. Nodes found by Newton iteration on P_n;
// good to machine precision for n up to a few hundred.
QuadRule gauss_legendre(int n, double a, double b);

// Composite Simpson weights for nodes t_0..t_{n-1} uniformly spaced.
// n must be odd (even interval count).
std::vector<double> simpson_weights(int n, double h);

} // namespace eisen
