// One PASS/FAIL line per acceptance criterion.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "floquet/bands.hpp"
#include "floquet/cli_io.hpp"
#include "floquet/expansion.hpp"
#include "floquet/multipliers.hpp"
#include "floquet/quadrature.hpp"
#include "test_operators.hpp"

using namespace floquet;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Model {
    StandardForm sf;
    BranchTable table;
    BandAtlas atlas;
};

Model build(const OperatorSpec& op, double lo, double hi, int grid, double tol) {
    Model m;
    m.sf = expand_standard_form(op);
    TrackOptions to;
    to.ode_tol = tol;
    to.grid_points = grid;
    to.threads = 0;
    m.table = track_branches(m.sf, lo, hi, to);
    BandOptions bo;
    bo.ode_tol = tol;
    bo.threads = 0;
    m.atlas = detect_bands(m.table, m.sf, bo);
    return m;
}

std::string sci(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3e", v);
    return b;
}

// |Log a - Log b| with the imaginary parts compared mod 2 pi, relative to max(1, |Log b|)
double log_dev(cplx a, cplx b) {
    cplx la = std::log(a), lb = std::log(b);
    double di = std::remainder(la.imag() - lb.imag(), 2 * kPi);
    return std::hypot(la.real() - lb.real(), di) / std::max(1.0, std::abs(lb));
}

Outcome free_multipliers_check() {
    double worst = 0.0;
    for (int n : {1, 2}) {
        StandardForm sf = expand_standard_form(free_operator(n));
        TrackOptions to;
        to.ode_tol = 1e-13;
        to.grid_points = 200;
        to.log_grid = true;
        to.threads = 0;
        BranchTable t = track_branches(sf, 1.0, 1e4, to);
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (!t.on_grid[i]) continue;
            auto ref = free_multipliers(n, t.mu[i]);
            for (int k = 0; k < t.branches(); ++k)
                worst = std::max(worst, log_dev(t.rho(k, static_cast<Eigen::Index>(i)), ref[k]));
        }
    }
    return {worst <= 1e-6, "max deviation " + sci(worst)};
}

// det U is computed by LU of the integrated U, so its error grows like |U|^2 tol;
// the 4th-order operator is checked where |U| stays below about 1e4.
Outcome det_palindromy(const Model& mat, const Model& n2) {
    double det = 0.0, pal = 0.0;
    const std::pair<const Model*, double> runs[] = {{&mat, mat.atlas.mu_max}, {&n2, 50.0}};
    for (auto [m, hi] : runs) {
        for (double mu : make_grid(m->atlas.mu_min, hi, 200, false)) {
            MonodromyData md = monodromy(m->sf, mu, 1e-12);
            det = std::max(det, std::abs(det_monodromy(md) - 1.0));
            CharPoly cp = char_poly(md);
            const int N = md.order();
            for (int k = 0; k <= N; ++k) pal = std::max(pal, std::abs(cp.A[k] - cp.A[N - k]) / cp.scale());
        }
    }
    return {det <= 1e-9 && pal <= 1e-8, "det " + sci(det) + ", palindromy " + sci(pal)};
}

Outcome mathieu_edges(const Model& mat) {
    std::vector<double> edges;
    for (const auto& iv : mat.atlas.spectrum) {
        if (iv.lo > mat.atlas.mu_min) edges.push_back(iv.lo);
        if (iv.hi < mat.atlas.mu_max) edges.push_back(iv.hi);
    }
    auto ref = fourier_edges(mathieu_operator(1.0), 41);
    if (edges.size() < 6) return {false, "only " + std::to_string(edges.size()) + " edges"};
    double worst = 0.0;
    for (int i = 0; i < 6; ++i) worst = std::max(worst, std::abs(edges[i] - ref[i]));
    return {worst <= 1e-6, "max edge error " + sci(worst)};
}

Outcome weight_identity(const SpectralGrid& g) {
    double wid = 0.0, res = 0.0;
    for (const auto& sn : g.nodes) {
        double lhs = sn.p * std::abs(sn.node.dmu_dt), rhs = sn.w / (2 * kPi);
        wid = std::max(wid, std::abs(lhs - rhs) / rhs);
        res = std::max(res, sn.node.identity_residual);
    }
    return {wid <= 1e-8 && res <= 1e-8, std::to_string(g.nodes.size()) + " nodes, weight " + sci(wid) +
                                            ", identity residual " + sci(res)};
}

Outcome bloch_norms(const Model& mat) {
    const std::vector<double> ts{0.5, 1.0, 2.0, 4.0, 5.5};
    int count = 0;
    double norm = 0.0, orth = 0.0;
    for (double t : ts) {
        BlochResult r = bloch_eigs(mat.sf, mat.atlas, t, -1.0, 100.0, 1e-12, true, 0);
        for (const auto& e : r.eigs) norm = std::max(norm, e.norm_rel_err);
        count += static_cast<int>(r.eigs.size());
        orth = std::max(orth, r.orthogonality_defect);
    }
    return {count >= 50 && norm <= 1e-6 && orth <= 1e-8,
            std::to_string(count) + " pairs, norm " + sci(norm) + ", orthogonality " + sci(orth)};
}

struct Expansion {
    std::vector<double> parseval;  // per refinement level
    double roundtrip = 0.0;
};

Expansion expand(const Model& m, const std::vector<int>& levels) {
    Expansion e;
    Bump b;
    for (int N : levels) {
        ExpansionOptions o;
        o.mesh_N = N;
        o.threads = 0;
        SpectralGrid g = build_spectral_grid(m.sf, m.atlas, o);
        auto f = sample_on_cells(g.cells, [&](double x) { return cplx(b(x)); });
        auto phi = forward_transform(g, f);
        e.parseval.push_back(parseval(g, f).rel_err);
        auto back = inverse_transform(g, phi);
        std::vector<cplx> d(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) d[i] = back[i] - f[i];
        e.roundtrip = l2_norm(g.cells, d) / l2_norm(g.cells, f);
    }
    return e;
}

Outcome parseval_check(const std::vector<Expansion>& ex) {
    bool ok = true;
    std::string s;
    for (const auto& e : ex) {
        ok = ok && e.parseval.back() <= 1e-3;
        for (std::size_t i = 1; i < e.parseval.size(); ++i) ok = ok && e.parseval[i] < e.parseval[i - 1];
        s += s.empty() ? "" : "; ";
        for (std::size_t i = 0; i < e.parseval.size(); ++i) s += (i ? " > " : "") + sci(e.parseval[i]);
    }
    return {ok, s};
}

Outcome roundtrip_check(const std::vector<Expansion>& ex) {
    double worst = 0.0;
    for (const auto& e : ex) worst = std::max(worst, e.roundtrip);
    return {worst <= 1e-3, "max relative L2 error " + sci(worst)};
}

std::vector<double> random_spectrum_points(const BandAtlas& a, int count, unsigned seed, double hi) {
    std::mt19937_64 rng(seed);
    double total = 0.0;
    std::vector<Interval> ivs;
    for (const auto& iv : a.spectrum) {
        Interval c{iv.lo, std::min(iv.hi, hi)};
        if (c.hi > c.lo) {
            ivs.push_back(c);
            total += c.hi - c.lo;
        }
    }
    std::uniform_real_distribution<double> u(0.0, total);
    std::vector<double> pts;
    while (static_cast<int>(pts.size()) < count) {
        double s = u(rng);
        for (const auto& iv : ivs) {
            double w = iv.hi - iv.lo;
            if (s <= w) {
                double mu = iv.lo + s;
                if (mu - iv.lo > 1e-6 * w && iv.hi - mu > 1e-6 * w) pts.push_back(mu);
                break;
            }
            s -= w;
        }
    }
    return pts;
}

Outcome spectral_matrix_check(const Model& mat) {
    double herm = 0.0, mineig = 1e300;
    bool rank_ok = true;
    for (double mu : random_spectrum_points(mat.atlas, 100, 20261019u, 95.0)) {
        SpectralMatrixSample s = spectral_matrix(mat.sf, mat.atlas, mu, 1e-12);
        herm = std::max(herm, s.hermitian_defect);
        mineig = std::min(mineig, s.min_eigenvalue);
        rank_ok = rank_ok && s.rank == static_cast<int>(s.branches.size());
    }
    return {herm <= 1e-10 && mineig >= -1e-10 && rank_ok,
            "hermitian " + sci(herm) + ", min eigenvalue " + sci(mineig) + (rank_ok ? ", ranks match" : ", rank mismatch")};
}

Outcome reconstruction_check(const Model& mat) {
    double worst = 0.0;
    for (double mu : random_spectrum_points(mat.atlas, 20, 7u, 95.0))
        worst = std::max(worst, reconstruct_U(mat.sf, mu, 1e-12).rel_err);
    return {worst <= 1e-6, "max relative error " + sci(worst)};
}

Outcome hill_check(const Model& mat) {
    ExpansionOptions o;
    o.threads = 0;
    HillComparison h = hill_compare(mat.sf, mat.atlas, Bump{}, o);
    double worst = 0.0;
    for (std::size_t i = 0; i < h.x.size(); ++i)
        if (h.x[i] >= -2 * kPi && h.x[i] <= 2 * kPi) worst = std::max(worst, std::abs(h.general[i] - h.hill[i]));
    return {worst <= 1e-6, "max pointwise deviation " + sci(worst)};
}

Outcome gelfand_check() {
    Bump b;
    auto f = [&](double x) { return cplx(b(x)); };
    const int R = 5;
    GelfandGrid g = gelfand_forward(f, R, 2 * R + 1);
    QuadRule q = composite_gauss(24, b.lo(), b.hi(), 64);
    double l2 = 0.0;
    for (std::size_t i = 0; i < q.x.size(); ++i) l2 += q.w[i] * b(q.x[i]) * b(q.x[i]);
    double iso = std::abs(gelfand_norm2(g) - l2) / l2;
    Eigen::MatrixXcd back = gelfand_inverse(g);
    double rt = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i)
        for (int r = -R; r <= R; ++r) {
            rt = std::max(rt, std::abs(back(static_cast<Eigen::Index>(i), r + R) - f(g.x[i] + kPi * r)));
            scale = std::max(scale, std::abs(f(g.x[i] + kPi * r)));
        }
    rt /= scale;
    return {iso <= 1e-8 && rt <= 1e-10, "isometry " + sci(iso) + ", roundtrip " + sci(rt)};
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    int failed = 0;
    auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    };

    Model mat = build(mathieu_operator(1.0), -1.0, 105.0, 300, 1e-12);
    Model n2 = build(test_operator_n2(), -1.0, 700.0, 300, 1e-12);

    report(1, "free multipliers", free_multipliers_check);
    report(2, "det and palindromy", [&] { return det_palindromy(mat, n2); });
    report(3, "Mathieu band edges", [&] { return mathieu_edges(mat); });
    ExpansionOptions base;
    base.threads = 0;
    SpectralGrid g;
    report(4, "weight identity", [&] {
        g = build_spectral_grid(mat.sf, mat.atlas, base);
        return weight_identity(g);
    });
    report(5, "Bloch norms", [&] { return bloch_norms(mat); });
    std::vector<Expansion> ex;
    report(6, "Parseval", [&] {
        ex = {expand(mat, {2, 4, 8}), expand(n2, {2, 4, 8})};
        return parseval_check(ex);
    });
    report(7, "roundtrip", [&] {
        if (ex.empty()) return Outcome{false, "no expansion data"};
        return roundtrip_check(ex);
    });
    report(8, "spectral matrix", [&] { return spectral_matrix_check(mat); });
    report(9, "monodromy reconstruction", [&] { return reconstruction_check(mat); });
    report(10, "Hill cross-check", [&] { return hill_check(mat); });
    report(11, "Gelfand isometry", gelfand_check);

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%d of 11 criteria failed, %.1f s\n", failed, wall);
    return failed ? 1 : 0;
}
