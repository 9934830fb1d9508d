#pragma once

#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "floquet/bands.hpp"
#include "floquet/monodromy.hpp"

namespace floquet {

struct FloquetSolution {
    cplx mu;
    cplx rho;
    std::vector<cplx> v;  // E(x) = sum_q v[q] u_{q+1}(x)

    cplx E0() const { return v.front(); }
};

// Signed cofactors of the first row of the Floquet determinant.
FloquetSolution floquet_vector(const MonodromyData& md, cplx rho);

// E at x by integrating to the reduced point and extending quasi-periodically.
cplx eval_E(const StandardForm& sf, const FloquetSolution& fs, double x, double tol);
std::vector<cplx> eval_E(const StandardForm& sf, const FloquetSolution& fs, const std::vector<double>& xs,
                         double tol);

struct Weights {
    double p = 0.0;  // |2 pi E(0; mu, 1/rho) Delta'_rho|^{-1}
    double w = 0.0;  // |Delta'_mu E(0; mu, 1/rho)|^{-1}
    cplx e0_inv;     // E(0; mu, 1/rho)
    cplx delta_rho, delta_mu;
    bool near_singular = false;
};

Weights weights(const MonodromyData& md, cplx rho);

// Polynomial-windowed Gaussian exp(-s^2/2) (1 - (x-c)^2/R^2)^3 on |x - c| < R, s = (x - c)/width.
struct Bump {
    double center = 0.0, width = 1.0, radius = 4.0 * std::numbers::pi;
    double operator()(double x) const;
    double lo() const { return center - radius; }
    double hi() const { return center + radius; }
};

// Composite Gauss rule aligned with the period cells [r pi, (r+1) pi].
struct CellRule {
    std::vector<double> local_x, local_w;  // on [0, pi)
    int r_lo = 0, r_hi = -1;               // cells r_lo..r_hi
    int size() const { return static_cast<int>(local_x.size()) * (r_hi - r_lo + 1); }
    double x(int i) const;
    double w(int i) const;
};

CellRule make_cell_rule(double a, double b, int panels = 6, int order = 16);

struct ExpansionOptions {
    int mesh_N = 32;
    double ode_tol = 1e-12;
    int threads = 1;
    double cell_lo = -4.0 * std::numbers::pi, cell_hi = 4.0 * std::numbers::pi;  // evaluation range
    int panels = 6, order = 16;                                                     // per period cell
};

// Per-node data of the t-quadrature over all complete, non-point bands.
struct SpectralNode {
    int band = 0;  // index into atlas.bands
    int k = 1, j = 1;
    MeshNode node;
    double p = 0.0, w = 0.0;
    FloquetSolution fs, fs_inv;          // at rho = e^{it} and 1/rho
    std::vector<cplx> E_local, Einv_local;  // E and E(.; 1/rho) at CellRule local points
    std::vector<cplx> theta, phi;        // n = 1 only: u_1, u_2 at the local points
    cplx U00, U01, U11;                  // n = 1 only
};

struct SpectralGrid {
    CellRule cells;
    std::vector<BandMesh> meshes;
    std::vector<SpectralNode> nodes;
    double conj_defect = 0.0;  // max |v(1/rho) - conj v(rho)| / |v|
};

SpectralGrid build_spectral_grid(const StandardForm& sf, const BandAtlas& atlas, const ExpansionOptions& opt);

// Phi at every node: integral of f(y) E(y; mu, 1/rho) over the cell rule.
std::vector<cplx> forward_transform(const SpectralGrid& g, const std::vector<cplx>& f_on_cells);
// f at the cell-rule points from node values Phi.
std::vector<cplx> inverse_transform(const SpectralGrid& g, const std::vector<cplx>& phi);

std::vector<cplx> sample_on_cells(const CellRule& c, const std::function<cplx(double)>& f);

struct ParsevalResult {
    double lhs = 0.0, rhs = 0.0, rel_err = 0.0;
};

ParsevalResult parseval(const SpectralGrid& g, const std::vector<cplx>& f_on_cells);

double l2_norm(const CellRule& c, const std::vector<cplx>& f);

struct BlochEigen {
    double mu = 0.0;
    FloquetSolution fs;
    double norm2 = 0.0;        // integral of |E|^2 over [0, pi]
    cplx norm2_formula;        // (-1)^{n+1} e^{-it} Delta'_mu E(0; mu, e^{-it})
    double norm_rel_err = 0.0;
    std::vector<cplx> samples;  // E at the quadrature points on [0, pi]
};

struct BlochResult {
    double t = 0.0;
    std::vector<BlochEigen> eigs;
    int contour_count = -1;  // argument-principle zero count, -1 when skipped
    double orthogonality_defect = 0.0;
};

BlochResult bloch_eigs(const StandardForm& sf, const BandAtlas& atlas, double t, double mu_lo, double mu_hi,
                       double ode_tol, bool contour_check = true, int threads = 1);

// Number of zeros of Delta(., e^{it}) inside the rectangle [a, b] x [-h, h].
// hint: known real zeros, used only to limit the step near them.
int argument_count(const StandardForm& sf, double t, double a, double b, double h, double ode_tol,
                   const std::vector<double>& hint = {});

struct GelfandGrid {
    std::vector<double> x, wx;  // quadrature nodes on [0, pi]
    std::vector<double> t;      // uniform nodes on [0, 2 pi)
    Eigen::MatrixXcd F;         // F(x_i, t_m)
    int R = 0;
};

GelfandGrid gelfand_forward(const std::function<cplx(double)>& f, int R, int t_nodes, int x_order = 24,
                            int x_panels = 4);
// f(x_i + pi r) for r = -R..R, column r + R
Eigen::MatrixXcd gelfand_inverse(const GelfandGrid& g);
double gelfand_norm2(const GelfandGrid& g);

struct SpectralMatrixSample {
    double mu = 0.0;
    Eigen::MatrixXcd M;
    std::vector<int> branches;  // contributing k, 1-based
    std::vector<cplx> rho;      // their multipliers
    double hermitian_defect = 0.0;
    double min_eigenvalue = 0.0;
    int rank = 0;
    double conj_defect = 0.0;
};

SpectralMatrixSample spectral_matrix(const StandardForm& sf, const BandAtlas& atlas, double mu, double ode_tol);

// p(mu, rho) v(rho) v(1/rho)^T for one simple multiplier.
Eigen::MatrixXcd branch_matrix(const MonodromyData& md, cplx rho);

struct Reconstruction {
    Eigen::MatrixXcd U_rec, U_direct;
    double rel_err = 0.0;
    double cond = 0.0;
    std::vector<int> rows;  // chosen q' per branch (0-based)
};

Reconstruction reconstruct_U(const std::vector<Eigen::MatrixXcd>& branch_M, const std::vector<cplx>& multipliers);
Reconstruction reconstruct_U(const StandardForm& sf, double mu, double ode_tol);

struct HillComparison {
    std::vector<double> x;
    std::vector<cplx> general, hill;
    double max_dev = 0.0;
};

HillComparison hill_compare(const StandardForm& sf, const BandAtlas& atlas, const Bump& f, const ExpansionOptions& opt);

}  // namespace floquet
