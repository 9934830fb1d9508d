#include "floquet/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "floquet/operator_core.hpp"

namespace floquet {

cplx poly_eval(const std::vector<cplx>& c, cplx z) {
    cplx p = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) p = p * z + c[k];
    return p;
}

void poly_eval_d(const std::vector<cplx>& c, cplx z, cplx& p, cplx& dp) {
    p = 0.0;
    dp = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) {
        dp = dp * z + p;
        p = p * z + c[k];
    }
}

std::vector<cplx> poly_derivative(const std::vector<cplx>& c) {
    if (c.size() <= 1) return {cplx(0.0)};
    std::vector<cplx> d(c.size() - 1);
    for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = double(k) * c[k];
    return d;
}

std::vector<cplx> poly_from_roots(const std::vector<cplx>& roots) {
    std::vector<cplx> c{cplx(1.0)};
    for (cplx r : roots) {
        std::vector<cplx> nc(c.size() + 1, cplx(0.0));
        for (std::size_t k = 0; k < c.size(); ++k) {
            nc[k + 1] += c[k];
            nc[k] -= r * c[k];
        }
        c.swap(nc);
    }
    return c;
}

namespace {

Eigen::MatrixXcd sylvester(const std::vector<cplx>& p, const std::vector<cplx>& q) {
    const int m = static_cast<int>(p.size()) - 1, n = static_cast<int>(q.size()) - 1;
    Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(m + n, m + n);
    for (int r = 0; r < n; ++r)
        for (int k = 0; k <= m; ++k) S(r, r + k) = p[m - k];
    for (int r = 0; r < m; ++r)
        for (int k = 0; k <= n; ++k) S(n + r, r + k) = q[n - k];
    return S;
}

}  // namespace

cplx resultant(const std::vector<cplx>& p, const std::vector<cplx>& q) {
    Eigen::MatrixXcd S = sylvester(p, q);
    if (S.rows() == 0) return 1.0;
    return Eigen::FullPivLU<Eigen::MatrixXcd>(S).determinant();
}

double resultant_scale(const std::vector<cplx>& p, const std::vector<cplx>& q) {
    Eigen::MatrixXcd S = sylvester(p, q);
    double s = 1.0;
    for (int r = 0; r < S.rows(); ++r) s *= S.row(r).norm();
    return s;
}

std::vector<cplx> poly_roots(const std::vector<cplx>& c_in) {
    std::vector<cplx> c = c_in;
    while (c.size() > 1 && c.back() == cplx(0.0)) c.pop_back();
    const int d = static_cast<int>(c.size()) - 1;
    if (d <= 0) return {};
    if (d == 1) return {-c[0] / c[1]};

    // Newton polygon: upper hull of (k, log|c_k|)
    std::vector<double> lg(d + 1);
    for (int k = 0; k <= d; ++k)
        lg[k] = std::abs(c[k]) > 0 ? std::log(std::abs(c[k])) : -1e300;
    std::vector<int> hull;
    for (int k = 0; k <= d; ++k) {
        if (lg[k] <= -1e299) continue;
        while (hull.size() >= 2) {
            int a = hull[hull.size() - 2], b = hull.back();
            if ((lg[b] - lg[a]) * (k - a) <= (lg[k] - lg[a]) * (b - a)) hull.pop_back();
            else break;
        }
        hull.push_back(k);
    }
    std::vector<cplx> z;
    z.reserve(d);
    if (hull.front() > 0)
        for (int i = 0; i < hull.front(); ++i) z.push_back(0.0);
    for (std::size_t h = 0; h + 1 < hull.size(); ++h) {
        int a = hull[h], b = hull[h + 1];
        double r = std::exp((lg[a] - lg[b]) / double(b - a));
        for (int i = 0; i < b - a; ++i) {
            double ang = 2.0 * std::numbers::pi * (i + 0.25) / double(b - a) + 0.4 * h + 0.1;
            z.push_back(std::polar(r, ang));
        }
    }

    const double eps = 1e-16;
    for (int it = 0; it < 800; ++it) {
        double maxrel = 0.0;
        for (int i = 0; i < d; ++i) {
            cplx p, dp;
            poly_eval_d(c, z[i], p, dp);
            if (p == cplx(0.0)) continue;
            cplx ratio = p / dp;
            cplx s = 0.0;
            for (int j = 0; j < d; ++j)
                if (j != i) s += 1.0 / (z[i] - z[j]);
            cplx w = ratio / (1.0 - ratio * s);
            if (!std::isfinite(std::abs(w))) continue;
            z[i] -= w;
            maxrel = std::max(maxrel, std::abs(w) / std::max(std::abs(z[i]), 1e-300));
        }
        if (maxrel < 4 * eps) break;
    }
    // residual check relative to the evaluation scale
    for (int i = 0; i < d; ++i) {
        double sc = 0.0, az = std::abs(z[i]), pw = 1.0;
        for (int k = 0; k <= d; ++k, pw *= az) sc += std::abs(c[k]) * pw;
        if (!(std::abs(poly_eval(c, z[i])) <= 1e-6 * sc))
            throw ComputeError("poly_roots: root iteration did not converge");
    }
    return z;
}

std::vector<cplx> palindromic_reduce(const std::vector<cplx>& A) {
    const int n = static_cast<int>(A.size() - 1) / 2;
    // C_m(z) = rho^m + rho^-m as polynomials in z
    std::vector<std::vector<cplx>> C(n + 1);
    C[0] = {cplx(2.0)};
    if (n >= 1) C[1] = {cplx(0.0), cplx(1.0)};
    for (int m = 1; m < n; ++m) {
        std::vector<cplx> next(m + 2, cplx(0.0));
        for (int k = 0; k <= m; ++k) next[k + 1] += C[m][k];
        for (std::size_t k = 0; k < C[m - 1].size(); ++k) next[k] -= C[m - 1][k];
        C[m + 1] = next;
    }
    std::vector<cplx> Q(n + 1, cplx(0.0));
    Q[0] = A[n];
    for (int m = 1; m <= n; ++m)
        for (std::size_t k = 0; k < C[m].size(); ++k) Q[k] += A[n + m] * C[m][k];
    return Q;
}

namespace {

std::vector<cplx> quadratic_roots(cplx b, cplx c) {
    // z^2 + b z + c
    if (b.imag() == 0.0 && c.imag() == 0.0) {
        double br = b.real(), cr = c.real();
        double disc = br * br - 4.0 * cr;
        if (disc < 0.0) {
            double s = std::sqrt(-disc);
            return {cplx(-br / 2.0, s / 2.0), cplx(-br / 2.0, -s / 2.0)};
        }
        double q = -0.5 * (br + std::copysign(std::sqrt(disc), br));
        if (q == 0.0) return {0.0, 0.0};
        return {cplx(q), cplx(cr / q)};
    }
    cplx s = std::sqrt(b * b - 4.0 * c);
    if (std::abs(b + s) < std::abs(b - s)) s = -s;
    cplx q = -0.5 * (b + s);
    if (q == cplx(0.0)) return {0.0, 0.0};
    return {q, c / q};
}

}  // namespace

std::vector<cplx> palindromic_roots(const std::vector<cplx>& A) {
    const int n = static_cast<int>(A.size() - 1) / 2;
    std::vector<cplx> Q = palindromic_reduce(A);
    std::vector<cplx> zs;
    if (n == 1) zs = {-Q[0] / Q[1]};
    else if (n == 2) zs = quadratic_roots(Q[1] / Q[2], Q[0] / Q[2]);
    else zs = poly_roots(Q);

    std::vector<cplx> rho;
    rho.reserve(2 * n);
    for (cplx z : zs) {
        if (z.imag() == 0.0 && std::abs(z.real()) <= 2.0) {
            double x = z.real() / 2.0;
            double y = std::sqrt(std::max(0.0, 1.0 - x * x));
            rho.push_back(cplx(x, y));
            rho.push_back(cplx(x, -y));
            continue;
        }
        cplx s = std::sqrt(z * z - 4.0);
        cplx big = 0.5 * (z + s), other = 0.5 * (z - s);
        if (std::abs(other) > std::abs(big)) big = other;
        rho.push_back(big);
        rho.push_back(1.0 / big);
    }
    return rho;
}

}  // namespace floquet
