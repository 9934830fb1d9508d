#include <doctest.h>

#include <cmath>
#include <numbers>

#include "floquet/bands.hpp"
#include "floquet/cli_io.hpp"
#include "test_operators.hpp"

using namespace floquet;

namespace {
constexpr double kPi = std::numbers::pi;

struct Fixture {
    StandardForm sf;
    BranchTable table;
    BandAtlas atlas;
};

Fixture run(const OperatorSpec& op, double lo, double hi, int grid = 200, double tol = 1e-12) {
    Fixture f;
    f.sf = expand_standard_form(op);
    TrackOptions o;
    o.ode_tol = tol;
    o.grid_points = grid;
    f.table = track_branches(f.sf, lo, hi, o);
    BandOptions b;
    b.ode_tol = tol;
    f.atlas = detect_bands(f.table, f.sf, b);
    return f;
}

const Fixture& free_hill() {
    static Fixture f = run(free_operator(1), -1.0, 30.0, 200, 1e-13);
    return f;
}

const Fixture& mathieu() {
    static Fixture f = run(mathieu_operator(1.0), -1.0, 60.0, 300);
    return f;
}
}  // namespace

TEST_CASE("free Hill bands are [m^2, (m+1)^2] on each branch") {
    const auto& a = free_hill().atlas;
    for (int k = 1; k <= 2; ++k) {
        std::vector<const Band*> bs;
        for (const auto& b : a.bands)
            if (b.k == k && !b.point) bs.push_back(&b);
        REQUIRE(bs.size() >= 5);
        for (int m = 0; m < 5; ++m) {
            CHECK(bs[m]->mu_lo == doctest::Approx(m * m).epsilon(1e-8));
            CHECK(bs[m]->mu_hi == doctest::Approx((m + 1) * (m + 1)).epsilon(1e-8));
            CHECK(bs[m]->j == m + 1);
            CHECK(bs[m]->t_hi - bs[m]->t_lo == doctest::Approx(kPi));
        }
    }
    REQUIRE(a.spectrum.size() == 1);
    CHECK(std::abs(a.spectrum[0].lo) < 1e-8);
    CHECK(a.spectrum[0].hi == a.mu_max);
}

TEST_CASE("band rows are sorted by (k, j)") {
    const auto& a = mathieu().atlas;
    for (std::size_t i = 1; i < a.bands.size(); ++i) {
        const Band &p = a.bands[i - 1], &q = a.bands[i];
        CHECK((p.k < q.k || (p.k == q.k && p.j + 1 == q.j)));
    }
}

TEST_CASE("Mathieu band edges match the Fourier truncation") {
    const auto& a = mathieu().atlas;
    auto ref = fourier_edges(mathieu_operator(1.0), 41);
    CHECK(ref[0] == doctest::Approx(-0.4551386041).epsilon(1e-9));
    CHECK(ref[1] == doctest::Approx(-0.1102488170).epsilon(1e-9));
    CHECK(ref[2] == doctest::Approx(1.8591080725).epsilon(1e-9));
    CHECK(ref[3] == doctest::Approx(3.917024773).epsilon(1e-9));
    std::vector<double> edges;
    for (const auto& iv : a.spectrum) {
        edges.push_back(iv.lo);
        if (iv.hi < a.mu_max) edges.push_back(iv.hi);
    }
    REQUIRE(edges.size() >= 6);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(edges[i] - ref[i]) < 1e-6);
    CHECK(a.spectrum[0].hi < a.spectrum[1].lo);
    CHECK(a.spectrum[1].hi < a.spectrum[2].lo);
}

TEST_CASE("Mathieu edges satisfy the trace criterion |tr U| = 2") {
    const auto& f = mathieu();
    for (const auto& b : f.atlas.bands) {
        if (b.point) continue;
        for (const EdgePoint* e : {&b.lo, &b.hi}) {
            if (e->range_boundary) continue;
            cplx tr = monodromy(f.sf, e->mu, 1e-12).U.trace();
            CHECK(std::abs(std::abs(tr.real()) - 2.0) < 1e-7);
        }
    }
}

TEST_CASE("free n = 2: non-unit branches only touch the circle at 0") {
    Fixture f = run(free_operator(2), -1.0, 20.0, 200, 1e-13);
    for (const auto& b : f.atlas.bands)
        if (b.k == 1 || b.k == 4) {
            CHECK(b.point);
            CHECK(std::abs(b.mu_lo) < 1e-6);
        }
    REQUIRE(f.atlas.spectrum.size() == 1);
    CHECK(std::abs(f.atlas.spectrum[0].lo) < 1e-6);
}

TEST_CASE("band_mu_at inverts the multiplier on a free Hill band") {
    const auto& f = free_hill();
    const Band* band = nullptr;
    for (const auto& b : f.atlas.bands)
        if (!b.point && std::abs(b.mu_lo - 1.0) < 1e-6 && b.upper()) band = &b;
    REQUIRE(band);
    CHECK(band_mu_at(f.sf, *band, kPi / 2, 1e-13) == doctest::Approx(2.25).epsilon(1e-9));
}

TEST_CASE("band parametrization: free Hill closed form") {
    const auto& f = free_hill();
    for (const auto& b : f.atlas.bands) {
        if (b.point || b.incomplete() || b.mu_hi > 10.0) continue;
        BandMesh m = parametrize_band(f.sf, b, 12, 1e-13);
        for (const auto& nd : m.nodes) {
            // mu = s^2 with pi s = +-t mod 2 pi, so dmu/dt = +-2 s / pi
            double s = std::sqrt(nd.mu);
            CHECK(std::abs(nd.dmu_dt) == doctest::Approx(2 * s / kPi).epsilon(1e-8));
            CHECK(std::abs(nd.dmu_dt - nd.dmu_dt_implicit) < 1e-8 * std::abs(nd.dmu_dt));
            CHECK(std::abs(std::polar(1.0, nd.t) - nd.rho) < 1e-12);
        }
    }
}

TEST_CASE("band parametrization: Mathieu mu' sign and identity residual") {
    const auto& f = mathieu();
    for (const auto& b : f.atlas.bands) {
        if (b.point || b.incomplete()) continue;
        BandMesh m = parametrize_band(f.sf, b, 10, 1e-12);
        for (const auto& nd : m.nodes) {
            CHECK(nd.dmu_dt * b.orientation > 0.0);
            CHECK(nd.identity_residual < 1e-8);
            CHECK(std::abs(nd.dmu_dt_imag) < 1e-8 * std::abs(nd.dmu_dt));
            CHECK(nd.mu > b.mu_lo);
            CHECK(nd.mu < b.mu_hi);
        }
    }
}

TEST_CASE("4th-order test operator: folded band shares its turning point") {
    Fixture f = run(test_operator_n2(), -1.0, 20.0, 200);
    const Band *b1 = nullptr, *b2 = nullptr;
    for (const auto& b : f.atlas.bands) {
        if (b.point || b.mu_lo > 0.0) continue;
        if (b.k == 1) b1 = &b;
        if (b.k == 2) b2 = &b;
    }
    REQUIRE(b1);
    REQUIRE(b2);
    CHECK(b1->mu_lo == doctest::Approx(b2->mu_lo));
    CHECK(std::abs(b1->t_hi - b2->t_lo) < 1e-9);
    auto edges = fourier_edges(test_operator_n2(), 41);
    CHECK(std::abs(b1->mu_hi - edges[0]) < 1e-6);
    CHECK(std::abs(b2->mu_hi - edges[1]) < 1e-6);
}

TEST_CASE("spectrum union merges touching bands") {
    BandAtlas a;
    a.mu_min = 0.0;
    a.mu_max = 10.0;
    Band b1, b2, b3;
    b1.mu_lo = 0.0, b1.mu_hi = 2.0;
    b2.mu_lo = 1.5, b2.mu_hi = 3.0;
    b3.mu_lo = 5.0, b3.mu_hi = 6.0;
    a.bands = {b3, b1, b2};
    auto u = spectrum_union(a);
    REQUIRE(u.size() == 2);
    CHECK(u[0].lo == 0.0);
    CHECK(u[0].hi == 3.0);
    CHECK(u[1].lo == 5.0);
}
