#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace floquet {

using cplx = std::complex<double>;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ComputeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Refusal of a request outside the representable numeric range.
class RangeError : public ComputeError {
public:
    using ComputeError::ComputeError;
};

// Trigonometric polynomial sum_{m=-M..M} c_m e^{2imx}, period pi.
class TrigPoly {
public:
    TrigPoly() : c_(1, cplx(0.0)) {}
    explicit TrigPoly(int degree) : c_(2 * degree + 1, cplx(0.0)) {}

    int degree() const { return static_cast<int>(c_.size() / 2); }
    cplx coeff(int m) const;
    void set_coeff(int m, cplx v);
    void add_coeff(int m, cplx v);

    cplx eval(double x) const;
    cplx eval(cplx x) const;
    TrigPoly derivative(int order = 1) const;
    TrigPoly scaled(double s) const;
    TrigPoly& operator+=(const TrigPoly& other);

    bool is_zero() const;
    // max |c_{-m} - conj(c_m)|
    double conjugacy_defect() const;
    double max_abs_coeff() const;

    bool operator==(const TrigPoly& o) const { return c_ == o.c_; }

private:
    std::vector<cplx> c_;
};

struct OperatorSpec {
    int n = 1;
    std::vector<TrigPoly> coeffs;  // p_0 .. p_{n-1}
};

// (-1)^n y^(2n) + sum_{m=0}^{2n-2} a_m(x) y^(m)
struct StandardForm {
    int n = 1;
    std::vector<TrigPoly> a;

    int order() const { return 2 * n; }
    // Coefficient of y^(m); the y^(2n-1) slot is structurally zero.
    TrigPoly coefficient(int m) const;
    bool is_free() const;
};

OperatorSpec parse_operator(const std::string& document);
void validate(const OperatorSpec& spec);

StandardForm expand_standard_form(const OperatorSpec& spec);

std::vector<double> eval_coeffs(const StandardForm& sf, double x);
std::vector<cplx> eval_coeffs_complex(const StandardForm& sf, double x);

OperatorSpec free_operator(int n);
OperatorSpec mathieu_operator(double q = 1.0);

}  // namespace floquet
