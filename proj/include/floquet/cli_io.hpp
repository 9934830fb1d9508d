#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "floquet/expansion.hpp"
#include "floquet/operator_core.hpp"

namespace floquet {

struct Tolerances {
    double ode_tol = 1e-12;
    double band_tol = 1e-7;
    double collision_tol = 1e-6;
};

struct TestFunctionSpec {
    std::string kind = "bump";
    double center = 0.0, width = 1.0, support_radius = 4.0 * std::numbers::pi;
};

struct RunConfig {
    OperatorSpec op;
    double mu_lo = 0.0, mu_hi = 100.0;
    int grid_density = 200;
    bool log_grid = false;
    Tolerances tol;
    TestFunctionSpec test_function;
    std::string output_dir = "out";
    int mesh_N = 32;
    int threads = 1;
    double eval_lo = -4.0 * std::numbers::pi, eval_hi = 4.0 * std::numbers::pi;
    std::vector<double> bloch_t{0.5, 1.0, 2.0, 4.0, 5.5};
    double bloch_lo = 0.0, bloch_hi = 50.0;
    std::vector<double> sample_mu;  // spectral-matrix / reconstruct points
    int fourier_size = 41;
    std::string source;  // document text as given
};

RunConfig parse_run_config(const std::string& document);

Bump make_bump(const TestFunctionSpec& spec);

// CSV output with fixed schemas
using Cell = std::variant<long long, double, std::string>;

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;
};

const std::map<std::string, std::vector<std::string>>& csv_schemas();
Table make_table(const std::string& schema);
std::string format_csv(const Table& t);
void emit_csv(const Table& t, const std::string& schema, const std::string& path);

std::uint64_t fnv1a64(const std::string& bytes);

// Oracles
// Sorted periodic and antiperiodic eigenvalues of the operator truncated to
// size Fourier modes (odd size, centred).
std::vector<double> fourier_edges(const OperatorSpec& op, int size);
std::vector<double> fourier_eigenvalues(const OperatorSpec& op, int size, bool antiperiodic);
// exp(omega_k mu^{1/2n} pi) in label order
std::vector<cplx> free_multipliers(int n, double mu);
// integral of f(x) e^{-ikx}
cplx bump_fourier(const Bump& f, double k);

int run_command(int argc, char** argv);

}  // namespace floquet
