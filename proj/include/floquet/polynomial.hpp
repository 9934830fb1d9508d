#pragma once

#include <complex>
#include <vector>

namespace floquet {

using cplx = std::complex<double>;

// Coefficients are stored in ascending powers throughout.
cplx poly_eval(const std::vector<cplx>& c, cplx z);
void poly_eval_d(const std::vector<cplx>& c, cplx z, cplx& p, cplx& dp);
std::vector<cplx> poly_derivative(const std::vector<cplx>& c);
std::vector<cplx> poly_from_roots(const std::vector<cplx>& roots);

// Sylvester-matrix resultant of p and q.
cplx resultant(const std::vector<cplx>& p, const std::vector<cplx>& q);
// Product of Sylvester row norms (Hadamard bound on |resultant|).
double resultant_scale(const std::vector<cplx>& p, const std::vector<cplx>& q);

// All roots of a polynomial with nonzero leading coefficient (Aberth-Ehrlich
// iteration seeded from the Newton polygon, Newton polished).
std::vector<cplx> poly_roots(const std::vector<cplx>& c);

// Roots of a palindromic polynomial sum A_k rho^k (A_k = A_{2n-k}, monic) via
// z = rho + 1/rho; the reciprocal partner is formed exactly.
std::vector<cplx> palindromic_roots(const std::vector<cplx>& A);
// Monic coefficients of Q(z) with rho^{-n} Delta(rho) = Q(rho + 1/rho).
std::vector<cplx> palindromic_reduce(const std::vector<cplx>& A);

}  // namespace floquet
