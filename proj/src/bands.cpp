#include "floquet/bands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "floquet/expansion.hpp"
#include "floquet/parallel.hpp"
#include "floquet/polynomial.hpp"
#include "floquet/quadrature.hpp"

namespace floquet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

CharPoly cp_at(const StandardForm& sf, double mu, double tol) { return char_poly(monodromy(sf, mu, tol)); }

// Delta(mu, s) and d/dmu Delta(mu, s) for real s
double delta_s(const CharPoly& cp, double s) { return poly_eval(cp.A, s).real(); }
double delta_s_mu(const CharPoly& cp, double s) { return poly_eval(cp.dA, s).real(); }

template <class F>
double solve_bracket(F f, double a, double b, double fa, double fb) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    std::uintmax_t iters = 200;
    boost::math::tools::eps_tolerance<double> tol(50);
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
    return 0.5 * (r.first + r.second);
}

// t in the half of [0, 2 pi] selected by `upper` for a unit-modulus rho
double t_of(cplx rho, bool upper) {
    double a = std::arg(rho);  // (-pi, pi]
    if (upper) return std::clamp(std::abs(a), 0.0, kPi);
    return std::clamp(kTwoPi - std::abs(a), kPi, kTwoPi);
}

bool is_unit(cplx r, double tol) { return std::abs(std::abs(r) - 1.0) < tol; }

struct Located {
    double mu;
    double s;  // +-1, or 0 when the edge multiplier is elsewhere on the circle
    cplx rho;
};

// Edge at rho = s between a and b: a simple zero of Delta(., s), else an
// extremum (tangency) found from d/dmu Delta(., s), else the midpoint.
double locate_at(const StandardForm& sf, double tol, double a, double b, const CharPoly& ca,
                 const CharPoly& cb, double s, bool& found) {
    found = true;
    double fa = delta_s(ca, s), fb = delta_s(cb, s);
    if (fa * fb <= 0.0)
        return solve_bracket([&](double m) { return delta_s(cp_at(sf, m, tol), s); }, a, b, fa, fb);
    double ga = delta_s_mu(ca, s), gb = delta_s_mu(cb, s);
    if (ga * gb <= 0.0)
        return solve_bracket([&](double m) { return delta_s_mu(cp_at(sf, m, tol), s); }, a, b, ga, gb);
    found = false;
    return 0.5 * (a + b);
}

int unit_count(const std::vector<cplx>& v, double tol) {
    int c = 0;
    for (cplx r : v) c += is_unit(r, tol);
    return c;
}

class Detector {
public:
    Detector(const BranchTable& t, const StandardForm& sf, const BandOptions& opt)
        : T_(t), sf_(sf), opt_(opt), N_(t.branches()), M_(static_cast<int>(t.size())) {
        unit_.assign(N_, std::vector<char>(M_, 0));
        for (int k = 0; k < N_; ++k)
            for (int i = 0; i < M_; ++i) unit_[k][i] = is_unit(T_.rho(k, i), opt_.band_tol);
    }

    BandAtlas run() {
        BandAtlas atlas;
        atlas.n = T_.n;
        atlas.mu_min = T_.mu.front();
        atlas.mu_max = T_.mu.back();
        for (int k = 0; k < N_; ++k) branch_bands(k, atlas.bands);
        point_bands(atlas.bands);
        std::sort(atlas.bands.begin(), atlas.bands.end(), [](const Band& a, const Band& b) {
            return a.k != b.k ? a.k < b.k : a.mu_lo < b.mu_lo;
        });
        for (std::size_t i = 0; i < atlas.bands.size(); ++i)
            atlas.bands[i].j = (i > 0 && atlas.bands[i - 1].k == atlas.bands[i].k) ? atlas.bands[i - 1].j + 1 : 1;

        std::vector<double> ex{0.0, kPi, kTwoPi};
        for (const auto& b : atlas.bands) {
            if (!b.lo.range_boundary) ex.push_back(b.lo.t);
            if (!b.hi.range_boundary) ex.push_back(b.hi.t);
        }
        if (opt_.scan_exceptional)
            for (const auto& b : atlas.bands)
                if (!b.point) {
                    auto z = exceptional_zeros(b);
                    ex.insert(ex.end(), z.begin(), z.end());
                }
        std::sort(ex.begin(), ex.end());
        std::vector<double> uniq;
        for (double t : ex)
            if (uniq.empty() || t - uniq.back() > 1e-12) uniq.push_back(t);
        atlas.exceptional_t = uniq;
        atlas.spectrum = spectrum_union(atlas);
        return atlas;
    }

private:
    bool upper_of(int k, int i0, int i1) const {
        int score = 0;
        for (int i = i0; i <= i1; ++i) {
            double im = T_.rho(k, i).imag();
            if (std::abs(im) > 1e-12) score += im > 0 ? 1 : -1;
        }
        return score >= 0;
    }

    // Outer edge between unit sample iu and non-unit sample io of branch k.
    EdgePoint outer_edge(int k, int iu, int io, bool upper) const {
        const double a = std::min(T_.mu[iu], T_.mu[io]), b = std::max(T_.mu[iu], T_.mu[io]);
        const CharPoly& ca = T_.polys[std::min(iu, io)];
        const CharPoly& cb = T_.polys[std::max(iu, io)];
        const cplx hint = T_.rho(k, iu);
        const double s0 = hint.real() >= 0 ? 1.0 : -1.0;
        EdgePoint e;
        for (double s : {s0, -s0}) {
            if (delta_s(ca, s) * delta_s(cb, s) > 0.0) continue;
            bool found = false;
            e.mu = locate_at(sf_, opt_.ode_tol, a, b, ca, cb, s, found);
            e.rho = s;
            e.t = t_of(e.rho, upper);
            finish(e);
            return e;
        }
        // edge away from +-1: bisect on the number of unit multipliers
        const int want = unit_count(column(iu), opt_.band_tol);
        double lo = T_.mu[iu], hi = T_.mu[io];
        std::vector<cplx> vals = column(iu);
        for (int it = 0; it < 80 && std::abs(hi - lo) > 1e-13 * std::max(1.0, std::abs(lo)); ++it) {
            double mid = 0.5 * (lo + hi);
            auto v = eigen_multipliers(cp_at(sf_, mid, opt_.ode_tol));
            if (unit_count(v, opt_.band_tol) >= want) lo = mid, vals = v;
            else hi = mid;
        }
        e.mu = lo;
        double dmin = std::numeric_limits<double>::infinity();
        for (cplx r : vals)
            if (is_unit(r, opt_.band_tol) && std::abs(r - hint) < dmin) dmin = std::abs(r - hint), e.rho = r;
        // the two merging roots in z = rho + 1/rho: their mean is well conditioned
        auto z = poly_roots(palindromic_reduce(cp_at(sf_, lo, opt_.ode_tol).A));
        const cplx zh = e.rho + 1.0 / e.rho;
        std::sort(z.begin(), z.end(), [&](cplx a, cplx b) { return std::abs(a - zh) < std::abs(b - zh); });
        if (z.size() >= 2) {
            const double c = std::clamp(0.25 * (z[0] + z[1]).real(), -1.0, 1.0);
            e.rho = std::polar(1.0, upper ? std::acos(c) : -std::acos(c));
        }
        e.rho /= std::abs(e.rho);
        e.t = t_of(e.rho, upper);
        finish(e);
        return e;
    }

    // Edge where branch k passes through rho = +-1 between unit samples i and i+1.
    EdgePoint split_edge(int k, int i) const {
        const double s = (T_.rho(k, i) + T_.rho(k, i + 1)).real() >= 0 ? 1.0 : -1.0;
        bool found = false;
        EdgePoint e;
        e.mu = locate_at(sf_, opt_.ode_tol, T_.mu[i], T_.mu[i + 1], T_.polys[i], T_.polys[i + 1], s, found);
        e.rho = s;
        finish(e);
        return e;
    }

    void finish(EdgePoint& e) const {
        CharPoly cp = cp_at(sf_, e.mu, opt_.ode_tol);
        DeltaValues d = delta_eval(cp, e.rho);
        e.degenerate = std::abs(d.delta_rho) <= 1e-6 * cp.scale();
    }

    EdgePoint boundary_edge(int k, int i, bool upper) const {
        EdgePoint e;
        e.mu = T_.mu[i];
        e.rho = T_.rho(k, i) / std::abs(T_.rho(k, i));
        e.t = t_of(e.rho, upper);
        e.range_boundary = true;
        return e;
    }

    std::vector<cplx> column(int i) const {
        std::vector<cplx> v(N_);
        for (int k = 0; k < N_; ++k) v[k] = T_.rho(k, i);
        return v;
    }

    void branch_bands(int k, std::vector<Band>& out) {
        int i = 0;
        EdgePoint carried;  // split edge shared with the previous segment
        bool have_carried = false;
        while (i < M_) {
            if (!unit_[k][i]) {
                ++i;
                have_carried = false;
                continue;
            }
            int i0 = i, i1 = i;
            while (i1 + 1 < M_ && unit_[k][i1 + 1] && !sign_flip(k, i1)) ++i1;
            const bool split_after = i1 + 1 < M_ && unit_[k][i1 + 1];
            const bool upper = upper_of(k, i0, i1);

            Band b;
            b.k = k + 1;
            if (have_carried) {
                b.lo = carried;
            } else if (i0 == 0) {
                b.lo = boundary_edge(k, 0, upper);
            } else {
                b.lo = outer_edge(k, i0, i0 - 1, upper);
            }
            b.lo.t = b.lo.range_boundary ? b.lo.t : t_of(b.lo.rho, upper);
            if (split_after) {
                carried = split_edge(k, i1);
                have_carried = true;
                b.hi = carried;
            } else if (i1 == M_ - 1) {
                b.hi = boundary_edge(k, i1, upper);
                have_carried = false;
            } else {
                b.hi = outer_edge(k, i1, i1 + 1, upper);
                have_carried = false;
            }
            b.hi.t = b.hi.range_boundary ? b.hi.t : t_of(b.hi.rho, upper);
            b.mu_lo = b.lo.mu;
            b.mu_hi = b.hi.mu;

            b.trace.emplace_back(b.lo.mu, b.lo.t);
            for (int q = i0; q <= i1; ++q)
                if (T_.mu[q] > b.lo.mu && T_.mu[q] < b.hi.mu)
                    b.trace.emplace_back(T_.mu[q], t_of(T_.rho(k, q), upper));
            if (b.hi.mu > b.lo.mu) b.trace.emplace_back(b.hi.mu, b.hi.t);
            b.t_lo = std::min(b.lo.t, b.hi.t);
            b.t_hi = std::max(b.lo.t, b.hi.t);
            b.orientation = b.hi.t >= b.lo.t ? 1 : -1;
            b.point = b.mu_hi - b.mu_lo < opt_.band_tol;
            out.push_back(b);
            i = i1 + 1;
        }
    }

    bool sign_flip(int k, int i) const {
        double a = T_.rho(k, i).imag(), b = T_.rho(k, i + 1).imag();
        return (a > 1e-12 && b < -1e-12) || (a < -1e-12 && b > 1e-12);
    }

    // Collisions on the unit circle that no unit run of a branch passes through:
    // the branch touches the circle at a single point.
    void point_bands(std::vector<Band>& out) {
        for (const auto& ev : T_.collisions) {
            if (!ev.on_unit_circle) continue;
            auto it = std::upper_bound(T_.mu.begin(), T_.mu.end(), ev.mu_lo);
            int i = static_cast<int>(it - T_.mu.begin()) - 1;
            if (i < 0 || i + 1 >= M_) continue;
            int i2 = i + 1;
            while (i2 + 1 < M_ && T_.mu[i2] < ev.mu_hi) ++i2;
            auto lmod = [&](int k, int q) { return std::abs(std::log(std::abs(T_.rho(k, q)))); };
            double ref = std::max({lmod(ev.k1 - 1, i), lmod(ev.k1 - 1, i2), lmod(ev.k2 - 1, i), lmod(ev.k2 - 1, i2)});
            for (int k = 0; k < N_; ++k) {
                if (unit_[k][i] || unit_[k][i2]) continue;
                bool involved = k == ev.k1 - 1 || k == ev.k2 - 1 || std::max(lmod(k, i), lmod(k, i2)) <= 4.0 * ref;
                if (!involved) continue;
                const double s = (T_.rho(k, i) + T_.rho(k, i2)).real() >= 0 ? 1.0 : -1.0;
                bool found = false;
                double mu = locate_at(sf_, opt_.ode_tol, T_.mu[i], T_.mu[i2], T_.polys[i], T_.polys[i2], s, found);
                if (!found) continue;
                Band b;
                b.k = k + 1;
                b.point = true;
                b.lo.mu = b.hi.mu = b.mu_lo = b.mu_hi = mu;
                b.lo.rho = b.hi.rho = s;
                bool upper = T_.rho(k, i).imag() >= 0;
                b.lo.t = b.hi.t = b.t_lo = b.t_hi = t_of(s, upper);
                finish(b.lo);
                b.hi.degenerate = b.lo.degenerate;
                b.trace.emplace_back(mu, b.lo.t);
                out.push_back(b);
            }
        }
    }

    // Interior zeros of E(0; mu, 1/rho) along a band.
    std::vector<double> exceptional_zeros(const Band& b) const {
        std::vector<double> mus, ts;
        for (std::size_t q = 1; q + 1 < b.trace.size(); ++q) {
            mus.push_back(b.trace[q].first);
            ts.push_back(b.trace[q].second);
        }
        const int S = static_cast<int>(mus.size());
        if (S < 3) return {};
        std::vector<double> mag(S);
        parallel_for(S, opt_.threads, [&](int q) {
            MonodromyData md = monodromy(sf_, mus[q], opt_.ode_tol);
            mag[q] = std::abs(floquet_vector(md, std::polar(1.0, -ts[q])).v[0]);
        });
        const double top = *std::max_element(mag.begin(), mag.end());
        const bool upper = b.upper();
        auto value = [&](double mu, double& t) {
            MonodromyData md = monodromy(sf_, mu, opt_.ode_tol);
            auto vals = eigen_multipliers(char_poly(md));
            cplx best = vals.front();
            double dmin = std::numeric_limits<double>::infinity();
            for (cplx r : vals) {
                if (!is_unit(r, opt_.band_tol) || (r.imag() >= 0) != upper) continue;
                double d = std::abs(t_of(r, upper) - t);
                if (d < dmin) dmin = d, best = r;
            }
            t = t_of(best, upper);
            return std::abs(floquet_vector(md, 1.0 / best).v[0]);
        };
        std::vector<double> out;
        for (int q = 1; q + 1 < S; ++q) {
            if (!(mag[q] <= mag[q - 1] && mag[q] <= mag[q + 1])) continue;
            double a = mus[q - 1], c = mus[q + 1];
            const double g = 0.5 * (std::sqrt(5.0) - 1.0);
            double x1 = c - g * (c - a), x2 = a + g * (c - a);
            double t1 = ts[q], t2 = ts[q];
            double f1 = value(x1, t1), f2 = value(x2, t2);
            for (int it = 0; it < 60 && c - a > 1e-13 * std::max(1.0, std::abs(a)); ++it) {
                if (f1 < f2) {
                    c = x2, x2 = x1, f2 = f1, t2 = t1;
                    x1 = c - g * (c - a);
                    t1 = t2;
                    f1 = value(x1, t1);
                } else {
                    a = x1, x1 = x2, f1 = f2, t1 = t2;
                    x2 = a + g * (c - a);
                    t2 = t1;
                    f2 = value(x2, t2);
                }
            }
            double fmin = std::min(f1, f2);
            if (fmin < 1e-6 * top) out.push_back(f1 < f2 ? t1 : t2);
        }
        return out;
    }

    const BranchTable& T_;
    const StandardForm& sf_;
    BandOptions opt_;
    int N_, M_;
    std::vector<std::vector<char>> unit_;
};

}  // namespace

BandAtlas detect_bands(const BranchTable& table, const StandardForm& sf, const BandOptions& opt) {
    if (table.size() < 2) throw ConfigError("detect_bands: branch table too short");
    return Detector(table, sf, opt).run();
}

std::vector<Interval> spectrum_union(const BandAtlas& atlas) {
    std::vector<Interval> iv;
    for (const auto& b : atlas.bands) iv.push_back({b.mu_lo, b.mu_hi});
    std::sort(iv.begin(), iv.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> out;
    for (const auto& x : iv) {
        if (!out.empty() && x.lo <= out.back().hi + 1e-9 * std::max(1.0, std::abs(x.lo))) {
            out.back().hi = std::max(out.back().hi, x.hi);
            continue;
        }
        out.push_back(x);
    }
    return out;
}

double band_mu_at(const StandardForm& sf, const Band& band, double t, double ode_tol) {
    const auto& tr = band.trace;
    const double z = 2.0 * std::cos(t);
    auto G = [&](double mu) { return poly_eval(palindromic_reduce(cp_at(sf, mu, ode_tol).A), z).real(); };
    for (std::size_t q = 0; q + 1 < tr.size(); ++q) {
        double ta = tr[q].second, tb = tr[q + 1].second;
        if ((t - ta) * (t - tb) > 0.0) continue;
        double a = tr[q].first, b = tr[q + 1].first;
        double fa = G(a), fb = G(b);
        if (fa * fb > 0.0) {
            std::ostringstream os;
            os << "band_mu_at: no sign change for t = " << t << " on [" << a << ", " << b << "]";
            throw ComputeError(os.str());
        }
        return solve_bracket(G, a, b, fa, fb);
    }
    std::ostringstream os;
    os << "band_mu_at: t = " << t << " outside band " << band.k << "." << band.j;
    throw ComputeError(os.str());
}

BandMesh parametrize_band(const StandardForm& sf, const Band& band, int N, double ode_tol, int threads) {
    if (band.point) throw ConfigError("parametrize_band: single-point band");
    if (N < 2) throw ConfigError("parametrize_band: N < 2");
    QuadRule g = gauss_legendre(N, band.t_lo, band.t_hi);
    BandMesh mesh;
    mesh.k = band.k;
    mesh.j = band.j;
    mesh.nodes.resize(N);
    parallel_for(N, threads, [&](int i) {
        MeshNode& nd = mesh.nodes[i];
        nd.t = g.x[i];
        nd.weight = g.w[i];
        nd.mu = band_mu_at(sf, band, nd.t, ode_tol);
        CharPoly cp = char_poly(monodromy(sf, nd.mu, ode_tol));
        nd.rho = std::polar(1.0, nd.t);
        DeltaValues d = delta_eval(cp, nd.rho);
        nd.delta_rho = d.delta_rho;
        nd.delta_mu = d.delta_mu;
        nd.delta_residual = std::abs(d.delta) / cp.scale();
        cplx mp = -cplx(0.0, 1.0) * nd.rho * d.delta_rho / d.delta_mu;
        nd.dmu_dt = mp.real();
        nd.dmu_dt_imag = mp.imag();
        const double z = 2.0 * std::cos(nd.t);
        std::vector<cplx> Q = palindromic_reduce(cp.A), dQ = palindromic_reduce(cp.dA);
        cplx qv, qd;
        poly_eval_d(Q, z, qv, qd);
        double G_t = (qd * (-2.0 * std::sin(nd.t))).real();
        double G_mu = poly_eval(dQ, z).real();
        nd.dmu_dt_implicit = -G_t / G_mu;
        cplx lhs = d.delta_mu * nd.dmu_dt_implicit, rhs = cplx(0.0, 1.0) * nd.rho * d.delta_rho;
        double sc = std::max(std::abs(lhs), std::abs(rhs));
        nd.identity_residual = sc > 0 ? std::abs(lhs + rhs) / sc : 0.0;
    });
    int s0 = 0;
    for (const auto& nd : mesh.nodes) {
        int s = nd.dmu_dt > 0 ? 1 : (nd.dmu_dt < 0 ? -1 : 0);
        if (s == 0 || (s0 != 0 && s != s0)) {
            std::ostringstream os;
            os << "parametrize_band: mu'(t) changes sign inside band " << band.k << "." << band.j
               << " near t = " << nd.t;
            throw ComputeError(os.str());
        }
        s0 = s;
    }
    return mesh;
}

}  // namespace floquet
