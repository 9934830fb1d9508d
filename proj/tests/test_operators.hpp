#pragma once

#include "floquet/operator_core.hpp"

// y'''' + (cos 2x y')' + cos 2x y
inline floquet::OperatorSpec test_operator_n2() {
    floquet::OperatorSpec s = floquet::free_operator(2);
    for (auto& p : s.coeffs) {
        p.set_coeff(1, 0.5);
        p.set_coeff(-1, 0.5);
    }
    return s;
}
