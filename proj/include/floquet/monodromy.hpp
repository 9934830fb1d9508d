#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "floquet/exterior.hpp"
#include "floquet/operator_core.hpp"

namespace floquet {

using CMat = Eigen::MatrixXcd;

struct MonodromyData {
    cplx mu;
    int n = 1;
    double tol = 1e-12;
    CMat U;       // U(i, q) = u_q^{(i)}(pi)
    CMat dU_dmu;
    // wedge[k] = k-th multiplicative compound of U for k = 0..2n, dwedge its mu-derivative.
    // Empty when computed without compounds.
    std::vector<CMat> wedge, dwedge;
    std::shared_ptr<const std::vector<SubsetIndex>> subsets;
    double local_error_estimate = 0.0;

    int order() const { return 2 * n; }
    bool has_compounds() const { return !wedge.empty(); }
};

struct CharPoly {
    int n = 1;
    std::vector<cplx> A;   // Delta(mu, rho) = sum_k A[k] rho^k, A[2n] = 1
    std::vector<cplx> dA;  // d A_k / d mu

    double scale() const;
};

struct DeltaValues {
    cplx delta, delta_rho, delta_mu;
};

// pi * max Re kappa over kappa^{2n} = (-1)^n mu; the log of the fastest growth over a period.
double growth_exponent(int n, cplx mu);
void check_numeric_range(int n, cplx mu);

MonodromyData monodromy(const StandardForm& sf, cplx mu, double tol, bool compounds = true);

// Same integration, also returning Y(x) at sorted xs in (0, pi]; xs == 0 gives the identity.
MonodromyData monodromy_sampled(const StandardForm& sf, cplx mu, double tol, bool compounds,
                                const std::vector<double>& xs, std::vector<CMat>& Y_at);

CharPoly char_poly(const MonodromyData& md);
// Monic characteristic coefficients of U by the Faddeev-LeVerrier recursion (cross-check).
std::vector<cplx> char_poly_faddeev_leverrier(const CMat& U);

DeltaValues delta_eval(const CharPoly& cp, cplx rho);
DeltaValues delta_eval(const MonodromyData& md, cplx rho);
// tr(adj(U - rho I) dU/dmu) with cofactors taken directly from U.
cplx delta_mu_jacobi(const MonodromyData& md, cplx rho);

cplx discriminant(const CharPoly& cp);
double discriminant_scale(const CharPoly& cp);
cplx discriminant(const StandardForm& sf, cplx mu, double tol);

cplx det_monodromy(const MonodromyData& md);

// det((U - rho I)[rows, cols]) expanded over minors of U taken from the compounds.
cplx shifted_minor(const MonodromyData& md, unsigned rows, unsigned cols, cplx rho);

}  // namespace floquet
