#pragma once

#include <vector>

#include <Eigen/Dense>

#include "floquet/monodromy.hpp"

namespace floquet {

class AmbiguityError : public ComputeError {
public:
    using ComputeError::ComputeError;
};

struct OmegaOrder {
    int n = 1;
    std::vector<cplx> omega;  // omega[k-1] = omega_k
};

OmegaOrder omega_order(int n);

// Roots of Delta(mu, .), each verified against the full characteristic polynomial.
std::vector<cplx> eigen_multipliers(const CharPoly& cp);
std::vector<cplx> eigen_multipliers(const MonodromyData& md);

// perm[k] = index into values assigned to branch k+1.
std::vector<int> label_asymptotic(const std::vector<cplx>& values, double mu, const OmegaOrder& order);

struct CollisionEvent {
    double mu_lo = 0.0, mu_hi = 0.0;
    int k1 = 0, k2 = 0;  // 1-based branch labels
    bool on_unit_circle = false;
    bool ramified = false;  // labels could not be continued analytically
    cplx discriminant_value;
};

struct TrackOptions {
    double ode_tol = 1e-12;
    double collision_tol = 1e-6;
    int grid_points = 200;
    bool log_grid = false;
    int max_halvings = 40;
    int threads = 1;
};

struct BranchTable {
    int n = 1;
    std::vector<double> mu;         // ascending, grid points plus refinement points
    Eigen::MatrixXcd rho;           // 2n x mu.size()
    std::vector<CharPoly> polys;    // characteristic polynomial at each mu
    std::vector<char> on_grid;      // 1 for the original grid points
    std::vector<CollisionEvent> collisions;

    int branches() const { return 2 * n; }
    std::size_t size() const { return mu.size(); }
};

std::vector<double> make_grid(double mu_min, double mu_max, int points, bool log_grid);

BranchTable track_branches(const StandardForm& sf, double mu_min, double mu_max, const TrackOptions& opt);

double involution_check(const BranchTable& table);

// min over pairs of |log rho_i - log rho_j| modulo 2 pi i
double log_gap(const std::vector<cplx>& values);

}  // namespace floquet
