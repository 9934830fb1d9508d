#include "floquet/monodromy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "floquet/ode.hpp"
#include "floquet/polynomial.hpp"

namespace floquet {

namespace {

constexpr double kPi = std::numbers::pi;

struct CompoundBlock {
    int k = 1;
    int d = 1;
    std::vector<SparseEntry> shift;                 // superdiagonal ones of the companion matrix
    std::vector<std::vector<SparseEntry>> last_row;  // entry (2n-1, s) for s = 0..2n-2
};

struct System {
    int n = 1;
    cplx mu;
    const StandardForm* sf = nullptr;
    std::vector<CompoundBlock> blocks;  // k = 1..K
    bool variational = true;
    std::vector<Eigen::Index> offset;   // start of Z_k, Z_k,mu follows when variational
    Eigen::Index size = 0;
};

System build_system(const StandardForm& sf, cplx mu, bool compounds, bool variational,
                    std::shared_ptr<std::vector<SubsetIndex>>& subsets) {
    System S;
    S.n = sf.n;
    S.mu = mu;
    S.sf = &sf;
    S.variational = variational;
    const int N = 2 * sf.n;
    const int K = compounds ? N - 1 : 1;
    subsets = std::make_shared<std::vector<SubsetIndex>>();
    for (int k = 0; k <= N; ++k) subsets->emplace_back(N, k);
    for (int k = 1; k <= std::max(K, 1); ++k) {
        CompoundBlock b;
        b.k = k;
        const SubsetIndex& idx = (*subsets)[k];
        b.d = idx.size();
        for (int r = 0; r + 1 < N; ++r) {
            auto e = additive_compound_unit(idx, r, r + 1);
            b.shift.insert(b.shift.end(), e.begin(), e.end());
        }
        for (int s = 0; s <= N - 2; ++s) b.last_row.push_back(additive_compound_unit(idx, N - 1, s));
        S.offset.push_back(S.size);
        S.size += Eigen::Index(b.d) * b.d * (variational ? 2 : 1);
        S.blocks.push_back(std::move(b));
    }
    return S;
}

void apply(const std::vector<SparseEntry>& es, cplx coef, const cplx* Z, cplx* dZ, int d) {
    // column-major d x d: dZ(row, :) += coef * e.coef * Z(col, :)
    for (const auto& e : es) {
        cplx c = coef * e.coef;
        for (int j = 0; j < d; ++j) dZ[e.row + j * d] += c * Z[e.col + j * d];
    }
}

void rhs(const System& S, double x, const CVec& y, CVec& dy) {
    const int N = 2 * S.n;
    const double sgn = (S.n % 2) ? -1.0 : 1.0;
    std::vector<cplx> a = eval_coeffs_complex(*S.sf, x);
    std::vector<cplx> c(N - 1);
    for (int s = 0; s <= N - 2; ++s) c[s] = -sgn * a[s];
    c[0] += sgn * S.mu;
    dy.setZero();
    for (std::size_t bi = 0; bi < S.blocks.size(); ++bi) {
        const auto& b = S.blocks[bi];
        const int d = b.d;
        const Eigen::Index off = S.offset[bi];
        const cplx* Z = y.data() + off;
        cplx* dZ = dy.data() + off;
        apply(b.shift, 1.0, Z, dZ, d);
        for (int s = 0; s <= N - 2; ++s)
            if (c[s] != cplx(0.0)) apply(b.last_row[s], c[s], Z, dZ, d);
        if (S.variational) {
            const cplx* Zm = Z + Eigen::Index(d) * d;
            cplx* dZm = dZ + Eigen::Index(d) * d;
            apply(b.shift, 1.0, Zm, dZm, d);
            for (int s = 0; s <= N - 2; ++s)
                if (c[s] != cplx(0.0)) apply(b.last_row[s], c[s], Zm, dZm, d);
            apply(b.last_row[0], sgn, Z, dZm, d);
        }
    }
}

void check_tol(double tol) {
    if (!(tol >= 1e-14 && tol <= 1e-4)) {
        std::ostringstream os;
        os << "monodromy: tolerance " << tol << " outside [1e-14, 1e-4]";
        throw ComputeError(os.str());
    }
}

MonodromyData integrate(const StandardForm& sf, cplx mu, double tol, bool compounds,
                        const std::vector<double>& xs, std::vector<CMat>* Y_at) {
    check_tol(tol);
    check_numeric_range(sf.n, mu);
    std::shared_ptr<std::vector<SubsetIndex>> subsets;
    System S = build_system(sf, mu, compounds, true, subsets);
    const int N = 2 * sf.n;

    CVec y = CVec::Zero(S.size);
    for (std::size_t bi = 0; bi < S.blocks.size(); ++bi) {
        const int d = S.blocks[bi].d;
        for (int i = 0; i < d; ++i) y[S.offset[bi] + i + Eigen::Index(i) * d] = 1.0;
    }

    std::vector<double> stops;
    if (Y_at) {
        Y_at->assign(xs.size(), CMat::Identity(N, N));
        for (double x : xs) {
            if (x < 0.0 || x > kPi) throw ComputeError("monodromy: sample point outside [0, pi]");
            stops.push_back(x);
        }
        if (!std::is_sorted(stops.begin(), stops.end()))
            throw ComputeError("monodromy: sample points must be sorted");
    }
    OdeOptions opt;
    opt.rtol = tol;
    opt.atol = tol;
    OdeObserver obs;
    if (Y_at) {
        obs = [&](std::size_t i, double, const CVec& s) {
            (*Y_at)[i] = Eigen::Map<const CMat>(s.data(), N, N);
        };
    }
    OdeStats st = dop853([&](double x, const CVec& yy, CVec& dd) { rhs(S, x, yy, dd); }, 0.0, kPi,
                         y, stops, obs, opt);

    MonodromyData md;
    md.mu = mu;
    md.n = sf.n;
    md.tol = tol;
    md.local_error_estimate = st.error_sum;
    md.U = Eigen::Map<const CMat>(y.data(), N, N);
    md.dU_dmu = Eigen::Map<const CMat>(y.data() + N * N, N, N);
    if (compounds) {
        md.wedge.assign(N + 1, CMat());
        md.dwedge.assign(N + 1, CMat());
        md.wedge[0] = CMat::Ones(1, 1);
        md.dwedge[0] = CMat::Zero(1, 1);
        for (std::size_t bi = 0; bi < S.blocks.size(); ++bi) {
            const int d = S.blocks[bi].d, k = S.blocks[bi].k;
            md.wedge[k] = Eigen::Map<const CMat>(y.data() + S.offset[bi], d, d);
            md.dwedge[k] = Eigen::Map<const CMat>(y.data() + S.offset[bi] + Eigen::Index(d) * d, d, d);
        }
        // top compound obeys z' = tr(A) z with tr A = 0
        md.wedge[N] = CMat::Ones(1, 1);
        md.dwedge[N] = CMat::Zero(1, 1);
        md.subsets = subsets;
    }
    return md;
}

}  // namespace

double growth_exponent(int n, cplx mu) {
    // kappa^{2n} = (-1)^n mu
    const int N = 2 * n;
    cplx base = (n % 2) ? -mu : mu;
    double r = std::pow(std::abs(base), 1.0 / N);
    double th = std::arg(base);
    double best = 0.0;
    for (int j = 0; j < N; ++j) best = std::max(best, r * std::cos((th + 2 * kPi * j) / N));
    return kPi * best;
}

void check_numeric_range(int n, cplx mu) {
    double g = growth_exponent(n, mu);
    // compounds grow by up to the sum of the n largest rates
    if (g > 300.0 || g * n > 650.0) {
        std::ostringstream os;
        os << "monodromy: mu = " << mu << " out of numeric range (growth exponent " << g << ")";
        throw RangeError(os.str());
    }
}

MonodromyData monodromy(const StandardForm& sf, cplx mu, double tol, bool compounds) {
    return integrate(sf, mu, tol, compounds, {}, nullptr);
}

MonodromyData monodromy_sampled(const StandardForm& sf, cplx mu, double tol, bool compounds,
                                const std::vector<double>& xs, std::vector<CMat>& Y_at) {
    return integrate(sf, mu, tol, compounds, xs, &Y_at);
}

double CharPoly::scale() const {
    double s = 0.0;
    for (auto a : A) s = std::max(s, std::abs(a));
    return s;
}

CharPoly char_poly(const MonodromyData& md) {
    const int N = md.order();
    CharPoly cp;
    cp.n = md.n;
    cp.A.assign(N + 1, 0.0);
    cp.dA.assign(N + 1, 0.0);
    if (md.has_compounds()) {
        for (int j = 0; j <= N; ++j) {
            double sg = (j % 2) ? -1.0 : 1.0;
            cp.A[j] = sg * md.wedge[N - j].trace();
            cp.dA[j] = sg * md.dwedge[N - j].trace();
        }
    } else {
        cp.A = char_poly_faddeev_leverrier(md.U);
        // derivative of the recursion in mu
        std::vector<cplx> c(N + 1), dc(N + 1);
        c[N] = 1.0;
        dc[N] = 0.0;
        CMat M = CMat::Zero(N, N), dM = CMat::Zero(N, N);
        CMat I = CMat::Identity(N, N);
        for (int k = 1; k <= N; ++k) {
            CMat Mn = md.U * M + c[N - k + 1] * I;
            CMat dMn = md.dU_dmu * M + md.U * dM + dc[N - k + 1] * I;
            M = Mn;
            dM = dMn;
            c[N - k] = -(md.U * M).trace() / double(k);
            dc[N - k] = -(md.dU_dmu * M + md.U * dM).trace() / double(k);
        }
        cp.dA = dc;
    }
    return cp;
}

std::vector<cplx> char_poly_faddeev_leverrier(const CMat& U) {
    const int N = static_cast<int>(U.rows());
    std::vector<cplx> c(N + 1);
    c[N] = 1.0;
    CMat M = CMat::Zero(N, N);
    CMat I = CMat::Identity(N, N);
    for (int k = 1; k <= N; ++k) {
        M = U * M + c[N - k + 1] * I;
        c[N - k] = -(U * M).trace() / double(k);
    }
    return c;  // det(rho I - U) = det(U - rho I) for even N
}

DeltaValues delta_eval(const CharPoly& cp, cplx rho) {
    DeltaValues v;
    poly_eval_d(cp.A, rho, v.delta, v.delta_rho);
    v.delta_mu = poly_eval(cp.dA, rho);
    return v;
}

DeltaValues delta_eval(const MonodromyData& md, cplx rho) { return delta_eval(char_poly(md), rho); }

cplx delta_mu_jacobi(const MonodromyData& md, cplx rho) {
    const int N = md.order();
    CMat B = md.U - rho * CMat::Identity(N, N);
    cplx s = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            // adj(B)(j, i) = (-1)^{i+j} minor_{ij}(B)
            CMat m(N - 1, N - 1);
            for (int r = 0, rr = 0; r < N; ++r) {
                if (r == i) continue;
                for (int q = 0, qq = 0; q < N; ++q) {
                    if (q == j) continue;
                    m(rr, qq++) = B(r, q);
                }
                ++rr;
            }
            cplx minor = N == 1 ? cplx(1.0) : m.determinant();
            double sg = ((i + j) % 2) ? -1.0 : 1.0;
            s += sg * minor * md.dU_dmu(i, j);
        }
    return s;
}

cplx discriminant(const CharPoly& cp) { return resultant(cp.A, poly_derivative(cp.A)); }

double discriminant_scale(const CharPoly& cp) { return resultant_scale(cp.A, poly_derivative(cp.A)); }

cplx discriminant(const StandardForm& sf, cplx mu, double tol) {
    return discriminant(char_poly(monodromy(sf, mu, tol)));
}

cplx det_monodromy(const MonodromyData& md) {
    return Eigen::PartialPivLU<CMat>(md.U).determinant();
}

cplx shifted_minor(const MonodromyData& md, unsigned rows, unsigned cols, cplx rho) {
    if (!md.has_compounds()) throw ComputeError("shifted_minor: compounds not available");
    const int N = md.order();
    const unsigned D = rows & cols;
    std::vector<int> pos_r(N, -1), pos_c(N, -1);
    for (int b = 0, pr = 0, pc = 0; b < N; ++b) {
        if (rows >> b & 1u) pos_r[b] = pr++;
        if (cols >> b & 1u) pos_c[b] = pc++;
    }
    const auto& subs = *md.subsets;
    cplx total = 0.0;
    // enumerate subsets S of D
    for (unsigned S = D;; S = (S - 1) & D) {
        int card = popcount(S);
        int parity = 0;
        for (int b = 0; b < N; ++b)
            if (S >> b & 1u) parity += pos_r[b] + pos_c[b];
        unsigned R = rows & ~S, C = cols & ~S;
        int k = popcount(R);
        cplx minor = k == 0 ? cplx(1.0) : md.wedge[k](subs[k].index_of(R), subs[k].index_of(C));
        cplx term = minor;
        for (int i = 0; i < card; ++i) term *= -rho;
        total += (parity % 2) ? -term : term;
        if (S == 0) break;
    }
    return total;
}

}  // namespace floquet
