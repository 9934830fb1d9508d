#include "floquet/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "floquet/multipliers.hpp"
#include "floquet/parallel.hpp"
#include "floquet/polynomial.hpp"
#include "floquet/quadrature.hpp"

namespace floquet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
const cplx I1(0.0, 1.0);

cplx ipow(cplx z, int r) {
    if (r < 0) return ipow(1.0 / z, -r);
    cplx out = 1.0;
    for (int i = 0; i < r; ++i) out *= z;
    return out;
}

double reduce_cell(double x, int& r) {
    r = static_cast<int>(std::floor(x / kPi));
    double x0 = x - r * kPi;
    if (x0 >= kPi) x0 -= kPi, ++r;
    if (x0 < 0.0) x0 = 0.0;
    return x0;
}

double norm_v(const std::vector<cplx>& v) {
    double s = 0.0;
    for (cplx c : v) s += std::norm(c);
    return std::sqrt(s);
}

cplx combine(const std::vector<cplx>& v, const CMat& Y) {
    cplx e = 0.0;
    for (std::size_t q = 0; q < v.size(); ++q) e += v[q] * Y(0, static_cast<Eigen::Index>(q));
    return e;
}

}  // namespace

FloquetSolution floquet_vector(const MonodromyData& md, cplx rho) {
    const int N = md.order();
    FloquetSolution fs;
    fs.mu = md.mu;
    fs.rho = rho;
    fs.v.resize(N);
    const unsigned rows = (1u << (N - 1)) - 1u, all = (1u << N) - 1u;
    double scale = 1.0;
    if (md.has_compounds()) {
        for (int q = 0; q < N; ++q) {
            cplx m = shifted_minor(md, rows, all & ~(1u << q), rho);
            fs.v[q] = (q % 2) ? -m : m;
        }
        scale = std::max(1.0, md.wedge[N - 1].cwiseAbs().maxCoeff());
    } else {
        CMat S = md.U - rho * CMat::Identity(N, N);
        for (int q = 0; q < N; ++q) {
            CMat minor(N - 1, N - 1);
            for (int r = 0; r < N - 1; ++r)
                for (int c = 0, cc = 0; c < N; ++c)
                    if (c != q) minor(r, cc++) = S(r, c);
            cplx m = N == 1 ? cplx(1.0) : minor.determinant();
            fs.v[q] = (q % 2) ? -m : m;
        }
        scale = std::max(1.0, std::pow(S.cwiseAbs().maxCoeff(), N - 1));
    }
    double top = 0.0;
    for (cplx c : fs.v) top = std::max(top, std::abs(c));
    if (top < 1e-12 * scale) {
        std::ostringstream os;
        os << "floquet_vector: all cofactors vanish at mu = " << md.mu << ", rho = " << rho;
        throw ComputeError(os.str());
    }
    return fs;
}

std::vector<cplx> eval_E(const StandardForm& sf, const FloquetSolution& fs, const std::vector<double>& xs,
                         double tol) {
    std::vector<double> local(xs.size());
    std::vector<int> cell(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) local[i] = reduce_cell(xs[i], cell[i]);
    const double lr = std::log(std::abs(fs.rho));
    for (int r : cell)
        if (std::abs(r * lr) > 690.0) throw RangeError("eval_E: rho^r overflows at the requested x");
    std::vector<std::size_t> order(xs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return local[a] < local[b]; });
    std::vector<double> sorted;
    for (auto i : order) sorted.push_back(local[i]);
    std::vector<CMat> Y;
    monodromy_sampled(StandardForm(sf), fs.mu, tol, false, sorted, Y);
    std::vector<cplx> out(xs.size());
    for (std::size_t s = 0; s < order.size(); ++s) {
        auto i = order[s];
        out[i] = ipow(fs.rho, cell[i]) * combine(fs.v, Y[s]);
    }
    return out;
}

cplx eval_E(const StandardForm& sf, const FloquetSolution& fs, double x, double tol) {
    return eval_E(sf, fs, std::vector<double>{x}, tol).front();
}

Weights weights(const MonodromyData& md, cplx rho) {
    Weights W;
    W.e0_inv = floquet_vector(md, 1.0 / rho).E0();
    DeltaValues d = delta_eval(md, rho);
    W.delta_rho = d.delta_rho;
    W.delta_mu = d.delta_mu;
    double a = std::abs(W.e0_inv * d.delta_rho), b = std::abs(W.e0_inv * d.delta_mu);
    if (a < 1e-12 || b < 1e-12) {
        std::ostringstream os;
        os << "weights: singular normalization at mu = " << md.mu << ", rho = " << rho;
        throw ComputeError(os.str());
    }
    W.p = 1.0 / (kTwoPi * a);
    W.w = 1.0 / b;
    W.near_singular = a < 1e-8 || b < 1e-8;
    return W;
}

double Bump::operator()(double x) const {
    double d = x - center;
    if (std::abs(d) >= radius) return 0.0;
    double s = d / width, u = 1.0 - (d / radius) * (d / radius);
    return std::exp(-0.5 * s * s) * u * u * u;
}

double CellRule::x(int i) const {
    const int G = static_cast<int>(local_x.size());
    return (r_lo + i / G) * kPi + local_x[i % G];
}

double CellRule::w(int i) const { return local_w[i % static_cast<int>(local_x.size())]; }

CellRule make_cell_rule(double a, double b, int panels, int order) {
    if (!(b > a)) throw ConfigError("make_cell_rule: empty range");
    CellRule c;
    c.r_lo = static_cast<int>(std::floor(a / kPi + 1e-12));
    c.r_hi = static_cast<int>(std::ceil(b / kPi - 1e-12)) - 1;
    QuadRule q = composite_gauss(order, 0.0, kPi, panels);
    c.local_x = q.x;
    c.local_w = q.w;
    return c;
}

std::vector<cplx> sample_on_cells(const CellRule& c, const std::function<cplx(double)>& f) {
    std::vector<cplx> out(c.size());
    for (int i = 0; i < c.size(); ++i) out[i] = f(c.x(i));
    return out;
}

double l2_norm(const CellRule& c, const std::vector<cplx>& f) {
    double s = 0.0;
    for (int i = 0; i < c.size(); ++i) s += c.w(i) * std::norm(f[i]);
    return std::sqrt(s);
}

SpectralGrid build_spectral_grid(const StandardForm& sf, const BandAtlas& atlas, const ExpansionOptions& opt) {
    SpectralGrid g;
    g.cells = make_cell_rule(opt.cell_lo, opt.cell_hi, opt.panels, opt.order);
    for (std::size_t b = 0; b < atlas.bands.size(); ++b) {
        const Band& band = atlas.bands[b];
        if (band.point || band.incomplete()) continue;
        g.meshes.push_back(parametrize_band(sf, band, opt.mesh_N, opt.ode_tol, opt.threads));
        for (const auto& nd : g.meshes.back().nodes) {
            SpectralNode sn;
            sn.band = static_cast<int>(b);
            sn.k = band.k;
            sn.j = band.j;
            sn.node = nd;
            g.nodes.push_back(sn);
        }
    }
    std::vector<double> defects(g.nodes.size(), 0.0);
    parallel_for(static_cast<int>(g.nodes.size()), opt.threads, [&](int i) {
        SpectralNode& sn = g.nodes[i];
        std::vector<CMat> Y;
        MonodromyData md = monodromy_sampled(sf, sn.node.mu, opt.ode_tol, true, g.cells.local_x, Y);
        const cplx rho = sn.node.rho;
        sn.fs = floquet_vector(md, rho);
        sn.fs_inv = floquet_vector(md, 1.0 / rho);
        Weights W = weights(md, rho);
        sn.p = W.p;
        sn.w = W.w;
        const std::size_t G = Y.size();
        sn.E_local.resize(G);
        sn.Einv_local.resize(G);
        for (std::size_t q = 0; q < G; ++q) {
            sn.E_local[q] = combine(sn.fs.v, Y[q]);
            sn.Einv_local[q] = combine(sn.fs_inv.v, Y[q]);
        }
        if (sf.n == 1) {
            sn.theta.resize(G);
            sn.phi.resize(G);
            for (std::size_t q = 0; q < G; ++q) sn.theta[q] = Y[q](0, 0), sn.phi[q] = Y[q](0, 1);
            sn.U00 = md.U(0, 0);
            sn.U01 = md.U(0, 1);
            sn.U11 = md.U(1, 1);
        }
        double d = 0.0;
        for (std::size_t q = 0; q < sn.fs.v.size(); ++q)
            d = std::max(d, std::abs(sn.fs_inv.v[q] - std::conj(sn.fs.v[q])));
        defects[i] = d / norm_v(sn.fs.v);
    });
    for (double d : defects) g.conj_defect = std::max(g.conj_defect, d);
    return g;
}

std::vector<cplx> forward_transform(const SpectralGrid& g, const std::vector<cplx>& f) {
    const int G = static_cast<int>(g.cells.local_x.size());
    if (static_cast<int>(f.size()) != g.cells.size()) throw ConfigError("forward_transform: sample count mismatch");
    std::vector<cplx> phi(g.nodes.size(), 0.0);
    for (std::size_t n = 0; n < g.nodes.size(); ++n) {
        const auto& sn = g.nodes[n];
        const cplx rinv = std::polar(1.0, -sn.node.t);
        cplx acc = 0.0;
        for (int r = g.cells.r_lo; r <= g.cells.r_hi; ++r) {
            const cplx pr = ipow(rinv, r);
            cplx cell = 0.0;
            const int base = (r - g.cells.r_lo) * G;
            for (int q = 0; q < G; ++q) cell += g.cells.local_w[q] * f[base + q] * sn.Einv_local[q];
            acc += pr * cell;
        }
        phi[n] = acc;
    }
    return phi;
}

std::vector<cplx> inverse_transform(const SpectralGrid& g, const std::vector<cplx>& phi) {
    const int G = static_cast<int>(g.cells.local_x.size());
    if (phi.size() != g.nodes.size()) throw ConfigError("inverse_transform: node count mismatch");
    std::vector<cplx> f(g.cells.size(), 0.0);
    for (std::size_t n = 0; n < g.nodes.size(); ++n) {
        const auto& sn = g.nodes[n];
        const cplx c = sn.node.weight * sn.w * phi[n] / kTwoPi;
        if (c == cplx(0.0)) continue;
        const cplx rho = std::polar(1.0, sn.node.t);
        for (int r = g.cells.r_lo; r <= g.cells.r_hi; ++r) {
            const cplx pr = c * ipow(rho, r);
            const int base = (r - g.cells.r_lo) * G;
            for (int q = 0; q < G; ++q) f[base + q] += pr * sn.E_local[q];
        }
    }
    return f;
}

ParsevalResult parseval(const SpectralGrid& g, const std::vector<cplx>& f) {
    ParsevalResult res;
    const double n = l2_norm(g.cells, f);
    res.lhs = n * n;
    std::vector<cplx> phi = forward_transform(g, f);
    for (std::size_t i = 0; i < phi.size(); ++i)
        res.rhs += g.nodes[i].node.weight * g.nodes[i].w * std::norm(phi[i]) / kTwoPi;
    res.rel_err = res.lhs > 0 ? std::abs(res.lhs - res.rhs) / res.lhs : std::abs(res.rhs);
    return res;
}

int argument_count(const StandardForm& sf, double t, double a, double b, double h, double ode_tol,
                   const std::vector<double>& hint) {
    const cplx rho = std::polar(1.0, t);
    auto g = [&](cplx mu) { return poly_eval(char_poly(monodromy(sf, mu, ode_tol)).A, rho); };
    auto cap = [&](cplx z) {
        double d = std::numeric_limits<double>::infinity();
        for (double m : hint) d = std::min(d, std::abs(z - m));
        return std::max(0.5 * h, 0.5 * d);
    };
    const cplx corners[5] = {{a, -h}, {b, -h}, {b, h}, {a, h}, {a, -h}};
    double total = 0.0;
    for (int s = 0; s < 4; ++s) {
        const cplx z0 = corners[s], z1 = corners[s + 1];
        const double len = std::abs(z1 - z0);
        auto at = [&](double p) { return z0 + (z1 - z0) * (p / len); };
        double pos = 0.0, step = std::min(len, h);
        cplx gcur = g(z0);
        while (pos < len) {
            double st = std::min({step, len - pos, cap(at(pos))});
            cplx gn = g(at(pos + st));
            double d = std::arg(gn / gcur);
            bool ok = std::abs(d) <= 0.3;
            if (ok) {
                cplx gm = g(at(pos + 0.5 * st));
                ok = std::abs(std::arg(gm / gcur) + std::arg(gn / gm) - d) < 1e-6;
            }
            if (!ok && st > 1e-10 * std::max(1.0, len)) {
                step = 0.5 * st;
                continue;
            }
            total += d;
            pos += st;
            gcur = gn;
            if (std::abs(d) < 0.05) step = 2.0 * st;
        }
    }
    return static_cast<int>(std::lround(total / kTwoPi));
}

BlochResult bloch_eigs(const StandardForm& sf, const BandAtlas& atlas, double t, double mu_lo, double mu_hi,
                       double ode_tol, bool contour_check, int threads) {
    BlochResult res;
    res.t = t;
    for (double e : atlas.exceptional_t)
        if (std::abs(t - e) < 1e-6) {
            std::ostringstream os;
            os << "bloch_eigs: t = " << t << " is exceptional";
            throw ConfigError(os.str());
        }
    std::vector<double> roots;
    for (const auto& b : atlas.bands) {
        if (b.point || t <= b.t_lo || t >= b.t_hi) continue;
        if (b.mu_hi < mu_lo - 1.0 || b.mu_lo > mu_hi + 1.0) continue;
        roots.push_back(band_mu_at(sf, b, t, ode_tol));
    }
    std::sort(roots.begin(), roots.end());
    std::vector<double> inside;
    for (double m : roots)
        if (m >= mu_lo && m <= mu_hi) inside.push_back(m);

    if (contour_check) {
        const double h = 1e-2;
        double a = mu_lo, b = mu_hi;
        auto near = [&](double x) {
            for (double m : roots)
                if (std::abs(m - x) < h) return true;
            return false;
        };
        while (near(a)) a -= h;
        while (near(b)) b += h;
        int expected = 0;
        for (double m : roots) expected += (m > a && m < b);
        if (a < atlas.mu_min || b > atlas.mu_max) throw ConfigError("bloch_eigs: window exceeds the computed range");
        res.contour_count = argument_count(sf, t, a, b, h, ode_tol, roots);
        if (res.contour_count != expected) {
            std::ostringstream os;
            os << "bloch_eigs: argument principle counts " << res.contour_count << " roots in [" << a << ", " << b
               << "], atlas gives " << expected;
            throw ComputeError(os.str());
        }
    }

    QuadRule q = composite_gauss(16, 0.0, kPi, 8);
    const cplx rho = std::polar(1.0, t);
    res.eigs.resize(inside.size());
    parallel_for(static_cast<int>(inside.size()), threads, [&](int i) {
        BlochEigen& e = res.eigs[i];
        e.mu = inside[i];
        std::vector<CMat> Y;
        MonodromyData md = monodromy_sampled(sf, e.mu, ode_tol, true, q.x, Y);
        e.fs = floquet_vector(md, rho);
        e.samples.resize(Y.size());
        e.norm2 = 0.0;
        for (std::size_t s = 0; s < Y.size(); ++s) {
            e.samples[s] = combine(e.fs.v, Y[s]);
            e.norm2 += q.w[s] * std::norm(e.samples[s]);
        }
        DeltaValues d = delta_eval(md, rho);
        cplx e0m = floquet_vector(md, 1.0 / rho).E0();
        double sg = (sf.n % 2) ? 1.0 : -1.0;  // (-1)^{n+1}
        e.norm2_formula = sg * std::conj(rho) * d.delta_mu * e0m;
        e.norm_rel_err = std::abs(e.norm2 - e.norm2_formula) / e.norm2;
    });
    for (std::size_t a = 0; a < res.eigs.size(); ++a)
        for (std::size_t b = a + 1; b < res.eigs.size(); ++b) {
            cplx ip = 0.0;
            for (std::size_t s = 0; s < q.x.size(); ++s)
                ip += q.w[s] * res.eigs[a].samples[s] * std::conj(res.eigs[b].samples[s]);
            double d = std::abs(ip) / std::sqrt(res.eigs[a].norm2 * res.eigs[b].norm2);
            res.orthogonality_defect = std::max(res.orthogonality_defect, d);
        }
    return res;
}

GelfandGrid gelfand_forward(const std::function<cplx(double)>& f, int R, int t_nodes, int x_order, int x_panels) {
    if (R < 0 || t_nodes < 1) throw ConfigError("gelfand: bad truncation");
    GelfandGrid g;
    g.R = R;
    QuadRule q = composite_gauss(x_order, 0.0, kPi, x_panels);
    g.x = q.x;
    g.wx = q.w;
    for (int m = 0; m < t_nodes; ++m) g.t.push_back(kTwoPi * m / t_nodes);
    g.F = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(g.x.size()), t_nodes);
    for (std::size_t i = 0; i < g.x.size(); ++i)
        for (int r = -R; r <= R; ++r) {
            cplx fv = f(g.x[i] + kPi * r);
            if (fv == cplx(0.0)) continue;
            for (int m = 0; m < t_nodes; ++m) g.F(i, m) += std::polar(1.0, -r * g.t[m]) * fv;
        }
    return g;
}

Eigen::MatrixXcd gelfand_inverse(const GelfandGrid& g) {
    const int T = static_cast<int>(g.t.size());
    Eigen::MatrixXcd out(static_cast<Eigen::Index>(g.x.size()), 2 * g.R + 1);
    for (std::size_t i = 0; i < g.x.size(); ++i)
        for (int r = -g.R; r <= g.R; ++r) {
            cplx s = 0.0;
            for (int m = 0; m < T; ++m) s += std::polar(1.0, r * g.t[m]) * g.F(i, m);
            out(i, r + g.R) = s / double(T);
        }
    return out;
}

double gelfand_norm2(const GelfandGrid& g) {
    const int T = static_cast<int>(g.t.size());
    double s = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) s += g.wx[i] * g.F.row(i).squaredNorm() / T;
    return s;
}

Eigen::MatrixXcd branch_matrix(const MonodromyData& md, cplx rho) {
    FloquetSolution v = floquet_vector(md, rho), vi = floquet_vector(md, 1.0 / rho);
    Weights W = weights(md, rho);
    const int N = md.order();
    Eigen::MatrixXcd M(N, N);
    for (int q = 0; q < N; ++q)
        for (int qp = 0; qp < N; ++qp) M(q, qp) = W.p * v.v[q] * vi.v[qp];
    return M;
}

namespace {

// the unit multiplier belonging to band b at mu
cplx band_multiplier(const Band& b, const std::vector<cplx>& vals, double mu) {
    double t_guess = b.trace.front().second;
    for (std::size_t q = 0; q + 1 < b.trace.size(); ++q)
        if (mu >= b.trace[q].first && mu <= b.trace[q + 1].first) {
            double f = (mu - b.trace[q].first) / (b.trace[q + 1].first - b.trace[q].first);
            t_guess = b.trace[q].second + f * (b.trace[q + 1].second - b.trace[q].second);
        }
    const cplx target = std::polar(1.0, t_guess);
    cplx best = vals.front();
    double dmin = std::numeric_limits<double>::infinity();
    for (cplx r : vals) {
        if (std::abs(std::abs(r) - 1.0) > 1e-6) continue;
        if (r.imag() != 0.0 && (r.imag() > 0) != b.upper()) continue;
        double d = std::abs(r - target);
        if (d < dmin) dmin = d, best = r;
    }
    if (!std::isfinite(dmin)) throw ComputeError("band multiplier not found on the unit circle");
    return best;
}

}  // namespace

SpectralMatrixSample spectral_matrix(const StandardForm& sf, const BandAtlas& atlas, double mu, double ode_tol) {
    SpectralMatrixSample s;
    s.mu = mu;
    MonodromyData md = monodromy(sf, mu, ode_tol);
    const auto vals = eigen_multipliers(char_poly(md));
    const int N = md.order();
    s.M = Eigen::MatrixXcd::Zero(N, N);
    for (const auto& b : atlas.bands) {
        if (b.point || !(mu > b.mu_lo && mu < b.mu_hi)) continue;
        cplx rho = band_multiplier(b, vals, mu);
        Weights W = weights(md, rho);
        if (W.near_singular) {
            std::ostringstream os;
            os << "spectral_matrix: mu = " << mu << " too close to a band edge";
            throw ComputeError(os.str());
        }
        FloquetSolution v = floquet_vector(md, rho), vi = floquet_vector(md, 1.0 / rho);
        double d = 0.0;
        for (int q = 0; q < N; ++q) d = std::max(d, std::abs(vi.v[q] - std::conj(v.v[q])));
        s.conj_defect = std::max(s.conj_defect, d / norm_v(v.v));
        for (int q = 0; q < N; ++q)
            for (int qp = 0; qp < N; ++qp) s.M(q, qp) += W.p * v.v[q] * vi.v[qp];
        s.branches.push_back(b.k);
        s.rho.push_back(rho);
    }
    if (s.branches.empty()) {
        std::ostringstream os;
        os << "spectral_matrix: mu = " << mu << " is not in the computed spectrum";
        throw ComputeError(os.str());
    }
    const double top = s.M.cwiseAbs().maxCoeff();
    s.hermitian_defect = (s.M - s.M.adjoint()).cwiseAbs().maxCoeff() / top;
    Eigen::MatrixXcd H = 0.5 * (s.M + s.M.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    s.min_eigenvalue = es.eigenvalues().minCoeff();
    const double emax = es.eigenvalues().cwiseAbs().maxCoeff();
    for (int i = 0; i < N; ++i) s.rank += es.eigenvalues()(i) > 1e-8 * emax;
    return s;
}

Reconstruction reconstruct_U(const std::vector<Eigen::MatrixXcd>& branch_M, const std::vector<cplx>& multipliers) {
    const int N = static_cast<int>(multipliers.size());
    if (static_cast<int>(branch_M.size()) != N) throw ConfigError("reconstruct_U: size mismatch");
    Reconstruction r;
    Eigen::MatrixXcd C(N, N);
    for (int k = 0; k < N; ++k) {
        Eigen::Index best = 0;
        branch_M[k].colwise().norm().maxCoeff(&best);
        r.rows.push_back(static_cast<int>(best));
        C.col(k) = branch_M[k].col(best);
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(C);
    const auto& sv = svd.singularValues();
    r.cond = sv(N - 1) > 0 ? sv(0) / sv(N - 1) : std::numeric_limits<double>::infinity();
    if (!(r.cond <= 1e10)) {
        std::ostringstream os;
        os << "reconstruct_U: eigenvector matrix is degenerate (cond " << r.cond << ")";
        throw ComputeError(os.str());
    }
    Eigen::VectorXcd d(N);
    for (int k = 0; k < N; ++k) d(k) = multipliers[k];
    r.U_rec = C * d.asDiagonal() * C.inverse();
    return r;
}

Reconstruction reconstruct_U(const StandardForm& sf, double mu, double ode_tol) {
    MonodromyData md = monodromy(sf, mu, ode_tol);
    const auto vals = eigen_multipliers(char_poly(md));
    if (log_gap(vals) < 1e-6) {
        std::ostringstream os;
        os << "reconstruct_U: multipliers collide at mu = " << mu;
        throw ComputeError(os.str());
    }
    std::vector<Eigen::MatrixXcd> Ms;
    for (cplx r : vals) Ms.push_back(branch_matrix(md, r));
    Reconstruction rec = reconstruct_U(Ms, vals);
    rec.U_direct = md.U;
    rec.rel_err = (rec.U_rec - md.U).norm() / md.U.norm();
    return rec;
}

HillComparison hill_compare(const StandardForm& sf, const BandAtlas& atlas, const Bump& f, const ExpansionOptions& opt) {
    if (sf.n != 1) throw ConfigError("hill_compare: needs n = 1");
    SpectralGrid g = build_spectral_grid(sf, atlas, opt);
    std::vector<cplx> fs = sample_on_cells(g.cells, [&](double x) { return cplx(f(x)); });
    HillComparison out;
    out.general = inverse_transform(g, forward_transform(g, fs));

    const int G = static_cast<int>(g.cells.local_x.size());
    out.hill.assign(g.cells.size(), 0.0);
    for (const auto& sn : g.nodes) {
        if (!atlas.bands[sn.band].upper()) continue;
        const cplx up = 0.5 * (sn.U00 + sn.U11), um = 0.5 * (sn.U00 - sn.U11);
        const cplx sq = std::sqrt(1.0 - up * up);
        const cplx phipi = sn.U01;
        const cplx cp = (um + I1 * sq) / phipi, cm = (um - I1 * sq) / phipi;
        const cplx rp = up - I1 * sq, rm = up + I1 * sq;  // multipliers of Y_+ and Y_-
        std::vector<cplx> Yp(G), Ym(G);
        for (int q = 0; q < G; ++q) {
            Yp[q] = sn.theta[q] - cp * sn.phi[q];
            Ym[q] = sn.theta[q] - cm * sn.phi[q];
        }
        cplx Fp = 0.0, Fm = 0.0;
        for (int r = g.cells.r_lo; r <= g.cells.r_hi; ++r) {
            const int base = (r - g.cells.r_lo) * G;
            const cplx ap = ipow(rp, r), am = ipow(rm, r);
            for (int q = 0; q < G; ++q) {
                Fp += g.cells.local_w[q] * fs[base + q] * ap * Yp[q];
                Fm += g.cells.local_w[q] * fs[base + q] * am * Ym[q];
            }
        }
        const cplx c = sn.node.weight * std::abs(sn.node.dmu_dt) * std::abs(phipi) / (4.0 * kPi * sq);
        for (int r = g.cells.r_lo; r <= g.cells.r_hi; ++r) {
            const int base = (r - g.cells.r_lo) * G;
            const cplx ap = ipow(rp, r), am = ipow(rm, r);
            for (int q = 0; q < G; ++q) out.hill[base + q] += c * (ap * Yp[q] * Fm + am * Ym[q] * Fp);
        }
    }
    for (int i = 0; i < g.cells.size(); ++i) {
        out.x.push_back(g.cells.x(i));
        out.max_dev = std::max(out.max_dev, std::abs(out.general[i] - out.hill[i]));
    }
    return out;
}

}  // namespace floquet
