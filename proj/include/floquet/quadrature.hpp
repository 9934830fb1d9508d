#pragma once

#include <vector>

namespace floquet {

struct QuadRule {
    std::vector<double> x, w;
};

// N-point Gauss-Legendre rule on [a, b].
QuadRule gauss_legendre(int N, double a = -1.0, double b = 1.0);

// Composite rule: `cells` equal panels of an N-point rule each.
QuadRule composite_gauss(int N, double a, double b, int cells);

}  // namespace floquet
