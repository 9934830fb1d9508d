#include "floquet/operator_core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

namespace floquet {

namespace {

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

cplx TrigPoly::coeff(int m) const {
    int M = degree();
    if (m < -M || m > M) return cplx(0.0);
    return c_[m + M];
}

void TrigPoly::set_coeff(int m, cplx v) {
    int M = degree();
    int am = std::abs(m);
    if (am > M) {
        std::vector<cplx> grown(2 * am + 1, cplx(0.0));
        for (int k = -M; k <= M; ++k) grown[k + am] = c_[k + M];
        c_.swap(grown);
        M = am;
    }
    c_[m + M] = v;
}

void TrigPoly::add_coeff(int m, cplx v) { set_coeff(m, coeff(m) + v); }

cplx TrigPoly::eval(double x) const {
    int M = degree();
    cplx s = c_[M];
    for (int m = 1; m <= M; ++m) {
        cplx e(std::cos(2.0 * m * x), std::sin(2.0 * m * x));
        s += c_[M + m] * e + c_[M - m] * std::conj(e);
    }
    return s;
}

cplx TrigPoly::eval(cplx x) const {
    int M = degree();
    cplx s = c_[M];
    const cplx I(0.0, 1.0);
    for (int m = 1; m <= M; ++m) {
        s += c_[M + m] * std::exp(2.0 * I * double(m) * x) +
             c_[M - m] * std::exp(-2.0 * I * double(m) * x);
    }
    return s;
}

TrigPoly TrigPoly::derivative(int order) const {
    TrigPoly d = *this;
    int M = degree();
    for (int m = -M; m <= M; ++m) {
        cplx f(1.0);
        for (int k = 0; k < order; ++k) f *= cplx(0.0, 2.0 * m);
        d.c_[m + M] *= f;
    }
    return d;
}

TrigPoly TrigPoly::scaled(double s) const {
    TrigPoly r = *this;
    for (auto& v : r.c_) v *= s;
    return r;
}

TrigPoly& TrigPoly::operator+=(const TrigPoly& o) {
    for (int m = -o.degree(); m <= o.degree(); ++m)
        if (o.coeff(m) != cplx(0.0)) add_coeff(m, o.coeff(m));
    return *this;
}

bool TrigPoly::is_zero() const {
    return std::all_of(c_.begin(), c_.end(), [](cplx v) { return v == cplx(0.0); });
}

double TrigPoly::conjugacy_defect() const {
    double d = 0.0;
    for (int m = 0; m <= degree(); ++m)
        d = std::max(d, std::abs(coeff(-m) - std::conj(coeff(m))));
    return d;
}

double TrigPoly::max_abs_coeff() const {
    double d = 0.0;
    for (auto v : c_) d = std::max(d, std::abs(v));
    return d;
}

TrigPoly StandardForm::coefficient(int m) const {
    if (m >= 0 && m <= 2 * n - 2) return a[m];
    return TrigPoly();
}

bool StandardForm::is_free() const {
    return std::all_of(a.begin(), a.end(), [](const TrigPoly& p) { return p.is_zero(); });
}

void validate(const OperatorSpec& spec) {
    if (spec.n < 1) throw ConfigError("operator: n must be >= 1");
    if (static_cast<int>(spec.coeffs.size()) != spec.n)
        throw ConfigError("operator: expected n coefficient functions");
    for (std::size_t j = 0; j < spec.coeffs.size(); ++j) {
        const auto& p = spec.coeffs[j];
        if (p.conjugacy_defect() > 1e-12 * std::max(1.0, p.max_abs_coeff()))
            throw ConfigError("operator: p_" + std::to_string(j) +
                              " violates c_{-m} = conj(c_m)");
    }
}

OperatorSpec parse_operator(const std::string& document) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("operator: malformed document: ") + e.what());
    }
    if (doc.contains("operator") && doc["operator"].is_object()) doc = doc["operator"];
    if (!doc.contains("n") || !doc["n"].is_number_integer())
        throw ConfigError("operator: missing integer field n");
    OperatorSpec spec;
    spec.n = doc["n"].get<int>();
    if (spec.n < 1) throw ConfigError("operator: n must be >= 1");
    spec.coeffs.assign(spec.n, TrigPoly());
    if (doc.contains("coefficients")) {
        const auto& cs = doc["coefficients"];
        if (!cs.is_array()) throw ConfigError("operator: coefficients must be an array");
        if (static_cast<int>(cs.size()) > spec.n)
            throw ConfigError("operator: more coefficient lists than n");
        for (std::size_t j = 0; j < cs.size(); ++j) {
            if (!cs[j].is_array()) throw ConfigError("operator: coefficients[j] must be an array");
            std::set<int> seen;
            for (const auto& rec : cs[j]) {
                if (!rec.is_object() || !rec.contains("m") || !rec["m"].is_number_integer())
                    throw ConfigError("operator: coefficient record needs integer m");
                int m = rec["m"].get<int>();
                if (!seen.insert(m).second)
                    throw ConfigError("operator: duplicate m = " + std::to_string(m) +
                                      " in p_" + std::to_string(j));
                double re = rec.value("re", 0.0);
                double im = rec.value("im", 0.0);
                spec.coeffs[j].set_coeff(m, cplx(re, im));
            }
        }
    }
    validate(spec);
    return spec;
}

StandardForm expand_standard_form(const OperatorSpec& spec) {
    validate(spec);
    StandardForm sf;
    sf.n = spec.n;
    sf.a.assign(2 * spec.n - 1, TrigPoly());
    for (int j = 0; j < spec.n; ++j) {
        const TrigPoly& p = spec.coeffs[j];
        if (p.is_zero()) continue;
        for (int i = 0; i <= j; ++i) sf.a[j + i] += p.derivative(j - i).scaled(binom(j, i));
    }
    return sf;
}

std::vector<cplx> eval_coeffs_complex(const StandardForm& sf, double x) {
    std::vector<cplx> out(sf.a.size());
    for (std::size_t m = 0; m < sf.a.size(); ++m) out[m] = sf.a[m].eval(x);
    return out;
}

std::vector<double> eval_coeffs(const StandardForm& sf, double x) {
    std::vector<double> out(sf.a.size());
    for (std::size_t m = 0; m < sf.a.size(); ++m) {
        cplx v = sf.a[m].eval(x);
        if (std::abs(v.imag()) > 1e-12 * std::max(1.0, std::abs(v.real())))
            throw ComputeError("standard form coefficient a_" + std::to_string(m) +
                               " is not real-valued");
        out[m] = v.real();
    }
    return out;
}

OperatorSpec free_operator(int n) {
    OperatorSpec s;
    s.n = n;
    s.coeffs.assign(n, TrigPoly());
    return s;
}

OperatorSpec mathieu_operator(double q) {
    OperatorSpec s = free_operator(1);
    s.coeffs[0].set_coeff(1, q);
    s.coeffs[0].set_coeff(-1, q);
    return s;
}

}  // namespace floquet
