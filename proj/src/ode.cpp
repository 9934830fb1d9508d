#include "floquet/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "floquet/operator_core.hpp"

namespace floquet {

namespace {

constexpr double c2 = 0.526001519587677318785587544488e-01;
constexpr double c3 = 0.789002279381515978178381316732e-01;
constexpr double c4 = 0.118350341907227396726757197510e+00;
constexpr double c5 = 0.281649658092772603273242802490e+00;
constexpr double c6 = 0.333333333333333333333333333333e+00;
constexpr double c7 = 0.25e+00;
constexpr double c8 = 0.307692307692307692307692307692e+00;
constexpr double c9 = 0.651282051282051282051282051282e+00;
constexpr double c10 = 0.6e+00;
constexpr double c11 = 0.857142857142857142857142857142e+00;

constexpr double a21 = 5.26001519587677318785587544488e-2;
constexpr double a31 = 1.97250569845378994544595329183e-2;
constexpr double a32 = 5.91751709536136983633785987549e-2;
constexpr double a41 = 2.95875854768068491816892993775e-2;
constexpr double a43 = 8.87627564304205475450678981324e-2;
constexpr double a51 = 2.41365134159266685502369798665e-1;
constexpr double a53 = -8.84549479328286085344864962717e-1;
constexpr double a54 = 9.24834003261792003115737966543e-1;
constexpr double a61 = 3.7037037037037037037037037037e-2;
constexpr double a64 = 1.70828608729473871279604482173e-1;
constexpr double a65 = 1.25467687566822425016691814123e-1;
constexpr double a71 = 3.7109375e-2;
constexpr double a74 = 1.70252211019544039314978060272e-1;
constexpr double a75 = 6.02165389804559606850219397283e-2;
constexpr double a76 = -1.7578125e-2;
constexpr double a81 = 3.70920001185047927108779319836e-2;
constexpr double a84 = 1.70383925712239993810214054705e-1;
constexpr double a85 = 1.07262030446373284651809199168e-1;
constexpr double a86 = -1.53194377486244017527936158236e-2;
constexpr double a87 = 8.27378916381402288758473766002e-3;
constexpr double a91 = 6.24110958716075717114429577812e-1;
constexpr double a94 = -3.36089262944694129406857109825e0;
constexpr double a95 = -8.68219346841726006818189891453e-1;
constexpr double a96 = 2.75920996994467083049415600797e1;
constexpr double a97 = 2.01540675504778934086186788979e1;
constexpr double a98 = -4.34898841810699588477366255144e1;
constexpr double a101 = 4.77662536438264365890433908527e-1;
constexpr double a104 = -2.48811461997166764192642586468e0;
constexpr double a105 = -5.90290826836842996371446475743e-1;
constexpr double a106 = 2.12300514481811942347288949897e1;
constexpr double a107 = 1.52792336328824235832596922938e1;
constexpr double a108 = -3.32882109689848629194453265587e1;
constexpr double a109 = -2.03312017085086261358222928593e-2;
constexpr double a111 = -9.3714243008598732571704021658e-1;
constexpr double a114 = 5.18637242884406370830023853209e0;
constexpr double a115 = 1.09143734899672957818500254654e0;
constexpr double a116 = -8.14978701074692612513997267357e0;
constexpr double a117 = -1.85200656599969598641566180701e1;
constexpr double a118 = 2.27394870993505042818970056734e1;
constexpr double a119 = 2.49360555267965238987089396762e0;
constexpr double a1110 = -3.0467644718982195003823669022e0;
constexpr double a121 = 2.27331014751653820792359768449e0;
constexpr double a124 = -1.05344954667372501984066689879e1;
constexpr double a125 = -2.00087205822486249909675718444e0;
constexpr double a126 = -1.79589318631187989172765950534e1;
constexpr double a127 = 2.79488845294199600508499808837e1;
constexpr double a128 = -2.85899827713502369474065508674e0;
constexpr double a129 = -8.87285693353062954433549289258e0;
constexpr double a1210 = 1.23605671757943030647266201528e1;
constexpr double a1211 = 6.43392746015763530355970484046e-1;

constexpr double b1 = 5.42937341165687622380535766363e-2;
constexpr double b6 = 4.45031289275240888144113950566e0;
constexpr double b7 = 1.89151789931450038304281599044e0;
constexpr double b8 = -5.8012039600105847814672114227e0;
constexpr double b9 = 3.1116436695781989440891606237e-1;
constexpr double b10 = -1.52160949662516078556178806805e-1;
constexpr double b11 = 2.01365400804030348374776537501e-1;
constexpr double b12 = 4.47106157277725905176885569043e-2;

constexpr double e31 = 0.244094488188976377952755905512e+00;
constexpr double e32 = 0.733846688281611857341361741547e+00;
constexpr double e33 = 0.220588235294117647058823529412e-01;

constexpr double e51 = 0.1312004499419488073250102996e-01;
constexpr double e56 = -0.1225156446376204440720569753e+01;
constexpr double e57 = -0.4957589496572501915214079952e+00;
constexpr double e58 = 0.1664377182454986536961530415e+01;
constexpr double e59 = -0.3503288487499736816886487290e+00;
constexpr double e510 = 0.3341791187130174790297318841e+00;
constexpr double e511 = 0.8192320648511571246570742613e-01;
constexpr double e512 = -0.2235530786388629525884427845e-01;

double scaled_norm(const CVec& v, const CVec& y, const OdeOptions& opt) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double sk = opt.atol + opt.rtol * std::abs(y[i]);
        double r = std::abs(v[i]) / sk;
        s += r * r;
    }
    return std::sqrt(s / double(v.size()));
}

}  // namespace

OdeStats dop853(const OdeRhs& f, double x0, double x1, CVec& y,
                const std::vector<double>& stops, const OdeObserver& observe,
                const OdeOptions& opt) {
    OdeStats st;
    const Eigen::Index N = y.size();
    CVec k1(N), k2(N), k3(N), k4(N), k5(N), k6(N), k7(N), k8(N), k9(N), k10(N), yw(N), ynew(N);
    const double span = x1 - x0;
    if (span <= 0.0) throw ComputeError("dop853: empty integration interval");

    double x = x0;
    f(x, y, k1);
    ++st.evaluations;

    // Hairer's starting step heuristic
    double h;
    {
        double d0 = scaled_norm(y, y, opt), d1 = scaled_norm(k1, y, opt);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, span);
        yw = y + h0 * k1;
        f(x + h0, yw, k2);
        ++st.evaluations;
        double d2 = scaled_norm(k2 - k1, y, opt) / h0;
        double dm = std::max(d1, d2);
        double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 8.0);
        h = std::min({100.0 * h0, h1, span});
    }

    std::size_t next_stop = 0;
    while (next_stop < stops.size() && stops[next_stop] <= x0) ++next_stop;

    bool reject = false;
    const double hmin = 1e-14 * std::max(1.0, std::abs(x1));

    while (x < x1) {
        if (st.accepted + st.rejected > opt.max_steps) {
            std::ostringstream os;
            os << "dop853: step budget exhausted at x = " << x;
            throw ComputeError(os.str());
        }
        double target = x1;
        if (next_stop < stops.size()) target = std::min(target, stops[next_stop]);
        bool hits = false;
        double hs = h;
        if (x + hs >= target - 1e-15 * std::max(1.0, std::abs(target))) {
            hs = target - x;
            hits = true;
        }
        if (hs < hmin && !hits) {
            std::ostringstream os;
            os << "dop853: step size underflow at x = " << x;
            throw ComputeError(os.str());
        }

        yw = y + hs * a21 * k1;
        f(x + c2 * hs, yw, k2);
        yw = y + hs * (a31 * k1 + a32 * k2);
        f(x + c3 * hs, yw, k3);
        yw = y + hs * (a41 * k1 + a43 * k3);
        f(x + c4 * hs, yw, k4);
        yw = y + hs * (a51 * k1 + a53 * k3 + a54 * k4);
        f(x + c5 * hs, yw, k5);
        yw = y + hs * (a61 * k1 + a64 * k4 + a65 * k5);
        f(x + c6 * hs, yw, k6);
        yw = y + hs * (a71 * k1 + a74 * k4 + a75 * k5 + a76 * k6);
        f(x + c7 * hs, yw, k7);
        yw = y + hs * (a81 * k1 + a84 * k4 + a85 * k5 + a86 * k6 + a87 * k7);
        f(x + c8 * hs, yw, k8);
        yw = y + hs * (a91 * k1 + a94 * k4 + a95 * k5 + a96 * k6 + a97 * k7 + a98 * k8);
        f(x + c9 * hs, yw, k9);
        yw = y + hs * (a101 * k1 + a104 * k4 + a105 * k5 + a106 * k6 + a107 * k7 + a108 * k8 +
                       a109 * k9);
        f(x + c10 * hs, yw, k10);
        yw = y + hs * (a111 * k1 + a114 * k4 + a115 * k5 + a116 * k6 + a117 * k7 + a118 * k8 +
                       a119 * k9 + a1110 * k10);
        f(x + c11 * hs, yw, k2);
        yw = y + hs * (a121 * k1 + a124 * k4 + a125 * k5 + a126 * k6 + a127 * k7 + a128 * k8 +
                       a129 * k9 + a1210 * k10 + a1211 * k2);
        f(x + hs, yw, k3);
        st.evaluations += 11;

        k4 = b1 * k1 + b6 * k6 + b7 * k7 + b8 * k8 + b9 * k9 + b10 * k10 + b11 * k2 + b12 * k3;
        ynew = y + hs * k4;

        double err3 = 0.0, err5 = 0.0;
        for (Eigen::Index i = 0; i < N; ++i) {
            double sk = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            double e3 = std::abs(k4[i] - e31 * k1[i] - e32 * k9[i] - e33 * k3[i]) / sk;
            double e5 = std::abs(e51 * k1[i] + e56 * k6[i] + e57 * k7[i] + e58 * k8[i] +
                                 e59 * k9[i] + e510 * k10[i] + e511 * k2[i] + e512 * k3[i]) /
                        sk;
            err3 += e3 * e3;
            err5 += e5 * e5;
        }
        double deno = err5 + 0.01 * err3;
        double err = deno > 0.0 ? std::abs(hs) * err5 / std::sqrt(double(N) * deno) : 0.0;

        if (err <= 1.0) {
            double fac = err == 0.0 ? 6.0
                                    : std::clamp(0.9 * std::pow(err, -0.125), 0.333, 6.0);
            if (reject) fac = std::min(fac, 1.0);
            st.error_sum += err * opt.rtol;
            ++st.accepted;
            x = hits ? target : x + hs;
            y = ynew;
            f(x, y, k1);
            ++st.evaluations;
            if (!hits || hs >= h) h = hs * fac;
            reject = false;
            while (hits && next_stop < stops.size() && stops[next_stop] <= x) {
                if (observe) observe(next_stop, x, y);
                ++next_stop;
            }
        } else {
            h = hs * std::max(0.9 * std::pow(err, -0.125), 0.333);
            reject = true;
            ++st.rejected;
        }
    }
    return st;
}

}  // namespace floquet
