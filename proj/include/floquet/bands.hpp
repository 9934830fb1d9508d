#pragma once

#include <numbers>
#include <utility>
#include <vector>

#include "floquet/monodromy.hpp"
#include "floquet/multipliers.hpp"

namespace floquet {

struct EdgePoint {
    double mu = 0.0;
    cplx rho;
    double t = 0.0;
    bool degenerate = false;      // Delta'_rho = 0 confirmed
    bool range_boundary = false;  // band cut by the computed mu range
};

struct Band {
    int k = 1;  // branch, 1-based
    int j = 1;  // ordinal within the branch, in increasing mu
    double mu_lo = 0.0, mu_hi = 0.0;
    double t_lo = 0.0, t_hi = 0.0;  // S = [t_lo, t_hi], inside [0, pi] or [pi, 2 pi]
    int orientation = 1;            // sign of mu'(t)
    EdgePoint lo, hi;               // edges at mu_lo and mu_hi
    bool point = false;             // single-point band
    std::vector<std::pair<double, double>> trace;  // (mu, t) samples, ascending mu

    bool incomplete() const { return lo.range_boundary || hi.range_boundary; }
    bool upper() const { return t_hi <= std::numbers::pi + 1e-12; }
};

struct Interval {
    double lo = 0.0, hi = 0.0;
};

struct BandAtlas {
    int n = 1;
    double mu_min = 0.0, mu_max = 0.0;
    std::vector<Band> bands;           // sorted by (k, j)
    std::vector<double> exceptional_t;  // sorted, contains 0, pi, 2 pi
    std::vector<Interval> spectrum;
};

struct BandOptions {
    double band_tol = 1e-7;
    double ode_tol = 1e-12;
    bool scan_exceptional = true;  // look for zeros of E(0; mu, 1/rho) inside bands
    int threads = 1;
};

BandAtlas detect_bands(const BranchTable& table, const StandardForm& sf, const BandOptions& opt);

std::vector<Interval> spectrum_union(const BandAtlas& atlas);

struct MeshNode {
    double t = 0.0, weight = 0.0;  // Gauss-Legendre node and weight in t
    double mu = 0.0;
    double dmu_dt = 0.0;           // -i e^{it} Delta'_rho / Delta'_mu
    double dmu_dt_implicit = 0.0;  // from the real reduced equation, independent of the above
    double dmu_dt_imag = 0.0;      // imaginary residue of the first formula
    cplx rho;                      // e^{it}
    cplx delta_rho, delta_mu;
    double delta_residual = 0.0;   // |Delta(mu, e^{it})| / scale
    double identity_residual = 0.0;  // |Delta'_mu mu'_implicit + i e^{it} Delta'_rho| / scale
};

struct BandMesh {
    int k = 1, j = 1;
    std::vector<MeshNode> nodes;
};

// Real mu in the band with rho_k(mu) = e^{it}, bracketed from the band trace.
double band_mu_at(const StandardForm& sf, const Band& band, double t, double ode_tol);

BandMesh parametrize_band(const StandardForm& sf, const Band& band, int N, double ode_tol, int threads = 1);

}  // namespace floquet
