#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace floquet {

using CVec = Eigen::VectorXcd;

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-10;
    long max_steps = 2000000;
};

struct OdeStats {
    long accepted = 0;
    long rejected = 0;
    long evaluations = 0;
    // sum over accepted steps of the scaled local error times tolerance
    double error_sum = 0.0;
};

using OdeRhs = std::function<void(double x, const CVec& y, CVec& dy)>;
using OdeObserver = std::function<void(std::size_t index, double x, const CVec& y)>;

// Dormand-Prince 8(5,3) with Hairer's error estimator. Steps are clamped to
// land exactly on every entry of stops (sorted, inside (x0, x1]).
OdeStats dop853(const OdeRhs& f, double x0, double x1, CVec& y,
                const std::vector<double>& stops, const OdeObserver& observe,
                const OdeOptions& opt);

}  // namespace floquet
