#include "floquet/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace floquet {

QuadRule gauss_legendre(int N, double a, double b) {
    if (N < 1) throw std::invalid_argument("gauss_legendre: N < 1");
    QuadRule r;
    r.x.resize(N);
    r.w.resize(N);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (int i = 0; i < (N + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (N + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 1; j <= N; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = N * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double w = 2.0 / ((1.0 - z * z) * dp * dp);
        r.x[i] = mid - half * z;
        r.x[N - 1 - i] = mid + half * z;
        r.w[i] = r.w[N - 1 - i] = half * w;
    }
    if (N % 2) r.x[N / 2] = mid;
    return r;
}

QuadRule composite_gauss(int N, double a, double b, int cells) {
    QuadRule out;
    const double h = (b - a) / cells;
    for (int c = 0; c < cells; ++c) {
        QuadRule g = gauss_legendre(N, a + c * h, a + (c + 1) * h);
        out.x.insert(out.x.end(), g.x.begin(), g.x.end());
        out.w.insert(out.w.end(), g.w.begin(), g.w.end());
    }
    return out;
}

}  // namespace floquet
