#include "floquet/multipliers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

#include "floquet/polynomial.hpp"

namespace floquet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

cplx wrap_to(cplx L, cplx ref) {
    double k = std::round((ref.imag() - L.imag()) / kTwoPi);
    return L + cplx(0.0, kTwoPi * k);
}

cplx reduce_mod(cplx d) {
    return cplx(d.real(), d.imag() - kTwoPi * std::round(d.imag() / kTwoPi));
}

struct Assignment {
    std::vector<int> perm;  // branch k -> value index
    double total = 0.0;
    double worst = 0.0;
};

// min-sum assignment (Hungarian, rows = branches)
std::vector<int> hungarian(const std::vector<std::vector<double>>& c) {
    const int n = static_cast<int>(c.size());
    const double INF = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1), v(n + 1);
    std::vector<int> p(n + 1), way(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, INF);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = 0;
            double delta = INF;
            for (int j = 1; j <= n; ++j)
                if (!used[j]) {
                    double cur = c[i0 - 1][j - 1] - u[i0] - v[j];
                    if (cur < minv[j]) minv[j] = cur, way[j] = j0;
                    if (minv[j] < delta) delta = minv[j], j1 = j;
                }
            for (int j = 0; j <= n; ++j)
                if (used[j]) u[p[j]] += delta, v[j] -= delta;
                else minv[j] -= delta;
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> perm(n);
    for (int j = 1; j <= n; ++j) perm[p[j] - 1] = j - 1;
    return perm;
}

Assignment score(const std::vector<std::vector<double>>& c, const std::vector<int>& perm) {
    Assignment a;
    a.perm = perm;
    for (std::size_t k = 0; k < perm.size(); ++k) {
        a.total += c[k][perm[k]];
        a.worst = std::max(a.worst, c[k][perm[k]]);
    }
    return a;
}

// All assignments sorted by total cost (brute force for small sizes, else just the optimum).
std::vector<Assignment> ranked_assignments(const std::vector<std::vector<double>>& c) {
    const int n = static_cast<int>(c.size());
    std::vector<Assignment> out;
    if (n <= 8) {
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        do out.push_back(score(c, perm));
        while (std::next_permutation(perm.begin(), perm.end()));
        std::stable_sort(out.begin(), out.end(),
                         [](const Assignment& a, const Assignment& b) { return a.total < b.total; });
    } else {
        out.push_back(score(c, hungarian(c)));
    }
    return out;
}

int sgn(double x, double eps) { return x > eps ? 1 : (x < -eps ? -1 : 0); }

// Among near-optimal assignments prefer the one keeping sign(Im rho) = sign(Im omega).
const Assignment& tie_break(const std::vector<Assignment>& ranked, const std::vector<cplx>& vals,
                            const OmegaOrder& order, bool& tied) {
    const Assignment& best = ranked.front();
    tied = ranked.size() > 1 && ranked[1].total <= 1.5 * best.total + 1e-300;
    if (!tied) return best;
    const Assignment* choice = &best;
    int best_score = std::numeric_limits<int>::min();
    for (const auto& a : ranked) {
        if (a.total > 1.5 * best.total + 1e-300) break;
        int s = 0;
        for (std::size_t k = 0; k < a.perm.size(); ++k) {
            int so = sgn(order.omega[k].imag(), 1e-12);
            int sr = sgn(vals[a.perm[k]].imag(), 1e-14 * std::max(1.0, std::abs(vals[a.perm[k]])));
            if (so != 0 && sr != 0) s += (so == sr) ? 1 : -1;
        }
        if (s > best_score) best_score = s, choice = &a;
    }
    return *choice;
}

struct Sample {
    double mu = 0.0;
    std::vector<cplx> vals;
    CharPoly cp;
    double noise = 0.0;  // estimated error of pairwise log gaps
};

// Root error of the reduced polynomial for a perturbation of relative size
// eps, mapped to log rho; square-root amplified near double roots.
double log_noise(const std::vector<cplx>& A, const std::vector<cplx>& vals, double eps) {
    const std::vector<cplx> Q = palindromic_reduce(A);
    const std::vector<cplx> dQ = poly_derivative(Q), d2Q = poly_derivative(dQ);
    double worst = 0.0;
    for (cplx r : vals) {
        cplx z = r + 1.0 / r;
        double S = 0.0, az = std::abs(z), pw = 1.0;
        for (std::size_t k = 0; k < Q.size(); ++k, pw *= az) S += std::abs(Q[k]) * pw;
        double a1 = std::abs(poly_eval(dQ, z)), a2 = std::abs(poly_eval(d2Q, z));
        double dz = std::numeric_limits<double>::infinity();
        if (a1 > 0) dz = eps * S / a1;
        if (a2 > 0) dz = std::min(dz, std::sqrt(2.0 * eps * S / a2));
        if (!std::isfinite(dz)) continue;
        double dL = std::min(dz / std::max(std::abs(r - 1.0 / r), 1e-300), std::sqrt(2.0 * dz));
        worst = std::max(worst, dL);
    }
    return 2.0 * worst;
}

Sample evaluate(const StandardForm& sf, double mu, double tol) {
    Sample s;
    s.mu = mu;
    s.cp = char_poly(monodromy(sf, mu, tol));
    s.vals = eigen_multipliers(s.cp);
    s.noise = log_noise(s.cp.A, s.vals, 100.0 * tol);
    return s;
}

struct Labeled {
    double mu;
    std::vector<cplx> rho;
    std::vector<cplx> L;  // unwrapped logs
    CharPoly cp;
};

class Tracker {
public:
    Tracker(const StandardForm& sf, const TrackOptions& opt)
        : sf_(sf), opt_(opt), order_(omega_order(sf.n)), N_(2 * sf.n) {}

    // March from cur to the sample tgt; every accepted point is appended to out.
    // Probes past tgt (but not beyond limit) when a collision sits right at it.
    void advance(const Sample& tgt, double limit, std::vector<Labeled>& out,
                 std::vector<CollisionEvent>& coll) {
        struct Pending {
            Sample s;
            int depth;
        };
        std::vector<Pending> stack{{tgt, 0}};
        while (!stack.empty()) {
            const Sample s = stack.back().s;
            const int depth = stack.back().depth;
            const double h = s.mu - cur_.mu;
            Match m = match(s);
            const Assignment& best = m.ranked.front();
            const double gap = log_gap(s.vals);
            const double thr = threshold(s);
            const double factor = relaxed_ ? 1.0 : 0.5;
            const double width_floor = 1e-12 * std::max(1.0, std::abs(s.mu));
            const bool near = gap < thr && log_gap(cur_.rho) < 16.0 * thr;
            const bool terminal = std::abs(h) <= width_floor || near || depth >= opt_.max_halvings;

            const bool clear = m.ranked.size() < 2 || m.ranked[1].total > 2.0 * best.total;
            bool accept = best.worst <= factor * gap && clear;
            double split = -1.0;
            if (accept) split = crossing_split(m.logs, best);
            if (accept && split < 0 && gap >= thr) {
                commit(s, best, m.logs, true, out);
                stack.pop_back();
                continue;
            }
            if (!terminal) {
                double frac = split > 0 ? split : 0.5;
                double mid = cur_.mu + frac * h;
                if (mid == cur_.mu || mid == s.mu) mid = cur_.mu + 0.5 * h;
                stack.push_back({evaluate(sf_, mid, opt_.ode_tol), depth + 1});
                continue;
            }

            // Collision next to s: probe outward until the branches separate
            // again, then decide between an analytic crossing and a ramification.
            CollisionEvent ev = describe(s, m, best);
            const bool last = stack.size() == 1;
            const double reach = last ? 0.5 * (limit - s.mu) : stack[stack.size() - 2].s.mu - s.mu;
            if (reach * h <= 0.0) {
                bool tied = false;
                const Assignment& chosen = tie_break(m.ranked, s.vals, order_, tied);
                ev.ramified = tied;
                ev.mu_lo = std::min(cur_.mu, s.mu);
                ev.mu_hi = std::max(cur_.mu, s.mu);
                coll.push_back(ev);
                commit(s, chosen, m.logs, !tied, out);
                stack.pop_back();
                continue;
            }
            Sample q;
            bool reuse = false;
            for (double step = std::abs(h);; step *= 2.0) {
                if (step >= std::abs(reach)) {
                    if (last) q = evaluate(sf_, s.mu + reach, opt_.ode_tol);
                    else q = stack[stack.size() - 2].s, reuse = true;
                    break;
                }
                q = evaluate(sf_, s.mu + std::copysign(step, h), opt_.ode_tol);
                if (log_gap(q.vals) >= 2.0 * threshold(q)) break;
            }
            Match mq = match(q);
            bool tied = false;
            const Assignment& chosen = tie_break(mq.ranked, q.vals, order_, tied);
            ev.ramified = tied;
            ev.mu_lo = std::min(cur_.mu, q.mu);
            ev.mu_hi = std::max(cur_.mu, q.mu);
            coll.push_back(ev);
            commit(q, chosen, mq.logs, true, out);
            stack.pop_back();
            if (reuse) stack.pop_back();
        }
    }

    void seed(const Sample& s) {
        auto perm = label_asymptotic(s.vals, s.mu, order_);
        cur_.mu = s.mu;
        cur_.cp = s.cp;
        cur_.rho.resize(N_);
        cur_.L.resize(N_);
        const double lam = std::pow(std::abs(s.mu), 1.0 / N_);
        for (int k = 0; k < N_; ++k) {
            cur_.rho[k] = s.vals[perm[k]];
            cur_.L[k] = wrap_to(std::log(cur_.rho[k]), order_.omega[k] * lam * kPi);
        }
        asymptotic_history();
        relaxed_ = false;
    }

    const Labeled& current() const { return cur_; }
    void restore(const Labeled& l) {
        cur_ = l;
        asymptotic_history();
        relaxed_ = false;
    }

private:
    // slope of L_k from omega_k mu^{1/2n} pi, so the first step can span several turns
    void asymptotic_history() {
        has_prev_ = cur_.mu > 0.0;
        if (!has_prev_) return;
        const double d = 1e-3 * cur_.mu;
        const double slope = kPi * std::pow(cur_.mu, 1.0 / N_) / (N_ * cur_.mu);
        prev_mu_ = cur_.mu - d;
        prev_L_.resize(N_);
        for (int k = 0; k < N_; ++k) prev_L_[k] = cur_.L[k] - order_.omega[k] * slope * d;
    }

    double threshold(const Sample& s) const { return std::max(opt_.collision_tol, 4.0 * s.noise); }

    struct Match {
        std::vector<Assignment> ranked;
        std::vector<std::vector<cplx>> logs;
    };

    Match match(const Sample& s) const {
        const double h = s.mu - cur_.mu;
        std::vector<cplx> pred(N_);
        for (int k = 0; k < N_; ++k) {
            pred[k] = cur_.L[k];
            if (has_prev_ && prev_mu_ != cur_.mu)
                pred[k] += (cur_.L[k] - prev_L_[k]) * (h / (cur_.mu - prev_mu_));
        }
        Match m;
        std::vector<std::vector<double>> cost(N_, std::vector<double>(N_));
        m.logs.assign(N_, std::vector<cplx>(N_));
        for (int k = 0; k < N_; ++k)
            for (int j = 0; j < N_; ++j) {
                m.logs[k][j] = wrap_to(std::log(s.vals[j]), pred[k]);
                cost[k][j] = std::abs(m.logs[k][j] - pred[k]);
            }
        m.ranked = ranked_assignments(cost);
        return m;
    }

    // Fraction of the step at which two branches pass close to each other
    // (modulo 2 pi i in log space), or -1.
    double crossing_split(const std::vector<std::vector<cplx>>& logs, const Assignment& a) const {
        for (int k = 0; k < N_; ++k)
            for (int k2 = k + 1; k2 < N_; ++k2) {
                cplx d0 = cur_.L[k] - cur_.L[k2];
                cplx d1 = logs[k][a.perm[k]] - logs[k2][a.perm[k2]];
                cplx dd = d1 - d0;
                double nn = std::norm(dd);
                if (nn == 0.0) continue;
                double lo = std::min(d0.imag(), d1.imag()), hi = std::max(d0.imag(), d1.imag());
                for (double m = std::floor(lo / kTwoPi); m <= std::ceil(hi / kTwoPi); m += 1.0) {
                    cplx c0 = d0 - cplx(0.0, kTwoPi * m), c1 = d1 - cplx(0.0, kTwoPi * m);
                    double sstar = -std::real(std::conj(c0) * dd) / nn;
                    if (sstar <= 0.0 || sstar >= 1.0) continue;
                    double dist = std::abs(c0 + sstar * dd);
                    if (dist < 0.25 * std::min(std::abs(c0), std::abs(c1))) return std::clamp(sstar, 0.02, 0.98);
                }
            }
        return -1.0;
    }

    CollisionEvent describe(const Sample& s, const Match& m, const Assignment& a) const {
        CollisionEvent ev;
        double gmin = std::numeric_limits<double>::infinity();
        for (int k = 0; k < N_; ++k)
            for (int k2 = k + 1; k2 < N_; ++k2) {
                double g = std::abs(reduce_mod(m.logs[k][a.perm[k]] - m.logs[k2][a.perm[k2]]));
                if (g < gmin) gmin = g, ev.k1 = k + 1, ev.k2 = k2 + 1;
            }
        cplx r1 = s.vals[a.perm[ev.k1 - 1]], r2 = s.vals[a.perm[ev.k2 - 1]];
        double ctol = std::max(threshold(s), 2.0 * gmin);
        ev.on_unit_circle = std::abs(std::abs(r1) - 1.0) < ctol && std::abs(std::abs(r2) - 1.0) < ctol;
        ev.discriminant_value = discriminant(s.cp);
        return ev;
    }

    void commit(const Sample& s, const Assignment& a, const std::vector<std::vector<cplx>>& logs,
                bool keep_history, std::vector<Labeled>& out) {
        prev_mu_ = cur_.mu;
        prev_L_ = cur_.L;
        Labeled nl;
        nl.mu = s.mu;
        nl.cp = s.cp;
        nl.rho.resize(N_);
        nl.L.resize(N_);
        for (int k = 0; k < N_; ++k) {
            nl.rho[k] = s.vals[a.perm[k]];
            nl.L[k] = logs[k][a.perm[k]];
        }
        cur_ = nl;
        has_prev_ = keep_history;
        relaxed_ = !keep_history;
        out.push_back(nl);
    }

    const StandardForm& sf_;
    TrackOptions opt_;
    OmegaOrder order_;
    int N_;
    Labeled cur_;
    bool has_prev_ = false;
    bool relaxed_ = false;
    double prev_mu_ = 0.0;
    std::vector<cplx> prev_L_;
};

}  // namespace

OmegaOrder omega_order(int n) {
    OmegaOrder o;
    o.n = n;
    const int N = 2 * n;
    // roots of omega^{2n} = (-1)^n sorted by decreasing real part, conjugate pairs adjacent
    std::vector<cplx> roots;
    for (int j = 0; j < N; ++j) {
        double ang = (n % 2) ? kPi * (2 * j + 1) / N : kTwoPi * j / N;
        roots.push_back(std::polar(1.0, ang));
    }
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
        if (std::abs(a.real() - b.real()) > 1e-12) return a.real() > b.real();
        return a.imag() > b.imag();  // within a pair the upper one first
    });
    for (auto& r : roots) {
        if (std::abs(r.real()) < 1e-15) r.real(0.0);
        if (std::abs(r.imag()) < 1e-15) r.imag(0.0);
    }
    o.omega = roots;
    return o;
}

std::vector<cplx> eigen_multipliers(const CharPoly& cp) {
    std::vector<cplx> r = palindromic_roots(cp.A);
    for (cplx z : r) {
        double sc = 0.0, az = std::abs(z), pw = 1.0;
        for (std::size_t k = 0; k < cp.A.size(); ++k, pw *= az) sc += std::abs(cp.A[k]) * pw;
        if (!(std::abs(poly_eval(cp.A, z)) <= 1e-8 * sc)) {
            std::ostringstream os;
            os << "eigen_multipliers: residual too large at rho = " << z;
            throw ComputeError(os.str());
        }
    }
    return r;
}

std::vector<cplx> eigen_multipliers(const MonodromyData& md) { return eigen_multipliers(char_poly(md)); }

std::vector<int> label_asymptotic(const std::vector<cplx>& values, double mu, const OmegaOrder& order) {
    const int N = 2 * order.n;
    if (static_cast<int>(values.size()) != N) throw ComputeError("label_asymptotic: wrong number of values");
    const double lam = std::pow(std::abs(mu), 1.0 / N);
    std::vector<std::vector<double>> cost(N, std::vector<double>(N));
    for (int k = 0; k < N; ++k) {
        cplx target = order.omega[k] * lam * kPi;
        for (int j = 0; j < N; ++j) {
            cplx L = std::log(values[j]);
            double dr = std::abs(L.real() - target.real());
            double di = std::abs(reduce_mod(cplx(0.0, L.imag() - target.imag())).imag());
            cost[k][j] = dr + di;
        }
    }
    auto ranked = ranked_assignments(cost);
    if (ranked.size() > 1 && ranked[1].total - ranked[0].total < 0.25) {
        std::ostringstream os;
        os << "label_asymptotic: ambiguous labeling at mu = " << mu;
        throw AmbiguityError(os.str());
    }
    return ranked.front().perm;
}

double log_gap(const std::vector<cplx>& values) {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i)
        for (std::size_t j = i + 1; j < values.size(); ++j)
            g = std::min(g, std::abs(reduce_mod(std::log(values[i]) - std::log(values[j]))));
    return g;
}

std::vector<double> make_grid(double mu_min, double mu_max, int points, bool log_grid) {
    if (!(mu_max > mu_min) || points < 2) throw ConfigError("grid: empty mu range");
    if (log_grid && mu_min <= 0.0) throw ConfigError("grid: log spacing needs mu_min > 0");
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i) {
        double s = double(i) / (points - 1);
        g[i] = log_grid ? std::exp(std::log(mu_min) + s * (std::log(mu_max) - std::log(mu_min)))
                        : mu_min + s * (mu_max - mu_min);
    }
    g.front() = mu_min;
    g.back() = mu_max;
    return g;
}

BranchTable track_branches(const StandardForm& sf, double mu_min, double mu_max, const TrackOptions& opt) {
    const std::vector<double> grid = make_grid(mu_min, mu_max, opt.grid_points, opt.log_grid);
    const int G = static_cast<int>(grid.size());
    std::vector<Sample> samples(G);
    std::vector<std::string> errors(G);
    {
        int nt = opt.threads > 0 ? opt.threads : static_cast<int>(std::thread::hardware_concurrency());
        nt = std::clamp(nt, 1, G);
        std::atomic<int> next{0};
        auto work = [&]() {
            for (int i = next++; i < G; i = next++) {
                try {
                    samples[i] = evaluate(sf, grid[i], opt.ode_tol);
                } catch (const std::exception& e) {
                    errors[i] = e.what();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int t = 1; t < nt; ++t) pool.emplace_back(work);
        work();
        for (auto& t : pool) t.join();
    }
    for (int i = 0; i < G; ++i)
        if (!errors[i].empty()) {
            bool range = errors[i].find("out of numeric range") != std::string::npos;
            if (range) throw RangeError(errors[i]);
            throw ComputeError(errors[i]);
        }

    Tracker tr(sf, opt);
    int seed = G - 1;
    while (true) {
        try {
            tr.seed(samples[seed]);
            break;
        } catch (const AmbiguityError&) {
            if (--seed < G / 2) throw;
        }
    }
    const Labeled seed_point = tr.current();

    std::vector<Labeled> down{seed_point}, up;
    std::vector<CollisionEvent> coll;
    for (int i = seed - 1; i >= 0; --i) tr.advance(samples[i], grid[std::max(i - 1, 0)], down, coll);
    tr.restore(seed_point);
    for (int i = seed + 1; i < G; ++i) tr.advance(samples[i], grid[std::min(i + 1, G - 1)], up, coll);

    std::vector<Labeled> all;
    all.insert(all.end(), down.rbegin(), down.rend());
    all.insert(all.end(), up.begin(), up.end());

    BranchTable t;
    t.n = sf.n;
    const int N = 2 * sf.n;
    t.rho.resize(N, static_cast<Eigen::Index>(all.size()));
    std::size_t gi = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        t.mu.push_back(all[i].mu);
        t.polys.push_back(all[i].cp);
        for (int k = 0; k < N; ++k) t.rho(k, static_cast<Eigen::Index>(i)) = all[i].rho[k];
        bool g = gi < grid.size() && all[i].mu == grid[gi];
        if (g) ++gi;
        t.on_grid.push_back(g ? 1 : 0);
    }
    std::sort(coll.begin(), coll.end(),
              [](const CollisionEvent& a, const CollisionEvent& b) { return a.mu_lo < b.mu_lo; });
    for (const auto& e : coll) {
        if (!t.collisions.empty()) {
            auto& b = t.collisions.back();
            if (b.k1 == e.k1 && b.k2 == e.k2 && e.mu_lo <= b.mu_hi) {
                b.mu_hi = std::max(b.mu_hi, e.mu_hi);
                b.ramified = b.ramified || e.ramified;
                b.on_unit_circle = b.on_unit_circle || e.on_unit_circle;
                continue;
            }
        }
        t.collisions.push_back(e);
    }
    return t;
}

double involution_check(const BranchTable& table) {
    double worst = 0.0;
    const Eigen::Index N = table.rho.rows();
    auto hausdorff = [&](Eigen::Index i, auto map) {
        double h = 0.0;
        for (Eigen::Index a = 0; a < N; ++a) {
            double dmin = std::numeric_limits<double>::infinity();
            cplx x = map(table.rho(a, i));
            for (Eigen::Index b = 0; b < N; ++b) {
                cplx y = table.rho(b, i);
                double scale = std::max(1.0, std::max(std::abs(x), std::abs(y)));
                dmin = std::min(dmin, std::abs(x - y) / scale);
            }
            h = std::max(h, dmin);
        }
        return h;
    };
    for (Eigen::Index i = 0; i < table.rho.cols(); ++i) {
        worst = std::max(worst, hausdorff(i, [](cplx z) { return 1.0 / z; }));
        worst = std::max(worst, hausdorff(i, [](cplx z) { return std::conj(z); }));
    }
    return worst;
}

}  // namespace floquet
