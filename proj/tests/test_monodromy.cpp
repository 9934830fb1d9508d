#include <doctest.h>

#include <cmath>
#include <numbers>

#include "floquet/monodromy.hpp"
#include "floquet/polynomial.hpp"
#include "test_operators.hpp"

using namespace floquet;

namespace {
constexpr double kPi = std::numbers::pi;
const cplx I(0.0, 1.0);

StandardForm free_hill() { return expand_standard_form(free_operator(1)); }
}  // namespace

TEST_CASE("free Hill monodromy at mu = 1 and 1/4") {
    MonodromyData a = monodromy(free_hill(), 1.0, 1e-12);
    CMat ea(2, 2);
    ea << -1.0, 0.0, 0.0, -1.0;
    CHECK((a.U - ea).norm() < 1e-10);
    MonodromyData b = monodromy(free_hill(), 0.25, 1e-12);
    CMat eb(2, 2);
    eb << 0.0, 2.0, -0.5, 0.0;
    CHECK((b.U - eb).norm() < 1e-10);
}

TEST_CASE("Mathieu monodromy agrees with a finer integration") {
    StandardForm sf = expand_standard_form(mathieu_operator(1.0));
    MonodromyData coarse = monodromy(sf, 0.0, 1e-11), fine = monodromy(sf, 0.0, 1e-13);
    CHECK((coarse.U - fine.U).norm() < 1e-10);
}

TEST_CASE("free Hill characteristic polynomial at mu = 1/4") {
    CharPoly cp = char_poly(monodromy(free_hill(), 0.25, 1e-12));
    CHECK(std::abs(cp.A[0] - 1.0) < 1e-10);
    CHECK(std::abs(cp.A[1]) < 1e-10);
    CHECK(std::abs(cp.A[2] - 1.0) < 1e-14);
}

TEST_CASE("Delta and its derivatives for free Hill at mu = 1/4, rho = i") {
    DeltaValues d = delta_eval(monodromy(free_hill(), 0.25, 1e-12), I);
    CHECK(std::abs(d.delta) < 1e-10);
    CHECK(std::abs(d.delta_rho - 2.0 * I) < 1e-10);
    CHECK(std::abs(d.delta_mu - 2.0 * kPi * I) < 1e-8);
}

TEST_CASE("double root of free Hill at mu = 1") {
    DeltaValues d = delta_eval(monodromy(free_hill(), 1.0, 1e-12), -1.0);
    CHECK(std::abs(d.delta) < 1e-10);
    CHECK(std::abs(d.delta_rho) < 1e-10);
}

TEST_CASE("discriminant vanishes at mu = m^2 for free Hill") {
    for (int m = 1; m <= 4; ++m) {
        CharPoly cp = char_poly(monodromy(free_hill(), double(m * m), 1e-12));
        CHECK(std::abs(discriminant(cp)) <= 1e-8 * discriminant_scale(cp));
    }
    CharPoly cp = char_poly(monodromy(free_hill(), 0.25, 1e-12));
    CHECK(std::abs(discriminant(cp)) > 1e-3 * discriminant_scale(cp));
}

TEST_CASE("palindromy and det U = 1 for Mathieu and the 4th-order operator") {
    for (const OperatorSpec& op : {mathieu_operator(1.0), test_operator_n2()}) {
        StandardForm sf = expand_standard_form(op);
        for (double mu : {-1.0, 0.3, 2.0, 7.5, 20.0}) {
            MonodromyData md = monodromy(sf, mu, 1e-12);
            CharPoly cp = char_poly(md);
            const int N = md.order();
            for (int k = 0; k <= N; ++k) CHECK(std::abs(cp.A[k] - cp.A[N - k]) <= 1e-8 * cp.scale());
            CHECK(std::abs(det_monodromy(md) - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("compound coefficients agree with Faddeev-LeVerrier") {
    StandardForm sf = expand_standard_form(test_operator_n2());
    for (double mu : {-0.5, 3.0, 12.0}) {
        MonodromyData md = monodromy(sf, mu, 1e-12);
        CharPoly cp = char_poly(md);
        auto fl = char_poly_faddeev_leverrier(md.U);
        for (std::size_t k = 0; k < fl.size(); ++k) CHECK(std::abs(fl[k] - cp.A[k]) < 1e-8 * cp.scale());
    }
}

TEST_CASE("mu-derivative: compounds, Jacobi formula and finite differences agree") {
    StandardForm sf = expand_standard_form(test_operator_n2());
    const double mu = 5.0, h = 1e-5;
    MonodromyData md = monodromy(sf, mu, 1e-13);
    for (cplx rho : {cplx(0.3, 0.4), cplx(-1.2, 0.1), cplx(2.0, -0.5)}) {
        DeltaValues d = delta_eval(md, rho);
        cplx jac = delta_mu_jacobi(md, rho);
        cplx fd = (delta_eval(monodromy(sf, mu + h, 1e-13), rho).delta -
                   delta_eval(monodromy(sf, mu - h, 1e-13), rho).delta) /
                  (2 * h);
        CHECK(std::abs(d.delta_mu - jac) < 1e-7 * std::max(1.0, std::abs(jac)));
        CHECK(std::abs(d.delta_mu - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("shifted minor of the full index set is the characteristic value") {
    StandardForm sf = expand_standard_form(test_operator_n2());
    MonodromyData md = monodromy(sf, 4.0, 1e-12);
    const cplx rho(0.7, -0.2);
    cplx direct = (md.U - rho * CMat::Identity(4, 4)).determinant();
    CHECK(std::abs(shifted_minor(md, 0xFu, 0xFu, rho) - direct) < 1e-9 * std::max(1.0, std::abs(direct)));
    CHECK(std::abs(delta_eval(md, rho).delta - direct) < 1e-9 * std::max(1.0, std::abs(direct)));
    // a 3x3 minor
    CMat S = md.U - rho * CMat::Identity(4, 4);
    CMat sub(3, 3);
    const int r[3] = {0, 1, 2}, c[3] = {0, 2, 3};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) sub(i, j) = S(r[i], c[j]);
    cplx m = shifted_minor(md, 0b0111u, 0b1101u, rho);
    CHECK(std::abs(m - sub.determinant()) < 1e-9 * std::max(1.0, std::abs(m)));
}

TEST_CASE("requests beyond the representable range are refused") {
    CHECK_THROWS_AS(monodromy(free_hill(), cplx(-1e9, 0.0), 1e-12), RangeError);
}

TEST_CASE("polynomial helpers") {
    std::vector<cplx> r{2.0, 0.5, I, -I};
    auto c = poly_from_roots(r);
    for (cplx z : r) CHECK(std::abs(poly_eval(c, z)) < 1e-12);
    auto roots = palindromic_roots(c);
    REQUIRE(roots.size() == 4);
    for (cplx z : r) {
        double best = 1e300;
        for (cplx w : roots) best = std::min(best, std::abs(w - z));
        CHECK(best < 1e-10);
    }
    CHECK(std::abs(resultant(poly_from_roots({1.0, 3.0}), poly_from_roots({3.0, -2.0}))) < 1e-10);
    CHECK(std::abs(resultant(poly_from_roots({1.0}), poly_from_roots({2.0}))) == doctest::Approx(1.0));
}
