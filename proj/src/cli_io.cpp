#include "floquet/cli_io.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "floquet/bands.hpp"
#include "floquet/multipliers.hpp"
#include "floquet/quadrature.hpp"

namespace floquet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr const char* kVersion = "floquet 1.0.0";

using nlohmann::json;

double num(const json& j, const char* key, double def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_number()) throw ConfigError(std::string("config: ") + key + " must be a number");
    return j[key].get<double>();
}

int integer(const json& j, const char* key, int def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_number_integer()) throw ConfigError(std::string("config: ") + key + " must be an integer");
    return j[key].get<int>();
}

std::pair<double, double> range(const json& j, const char* key, std::pair<double, double> def) {
    if (!j.contains(key)) return def;
    const auto& r = j[key];
    if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
        throw ConfigError(std::string("config: ") + key + " must be [lo, hi]");
    return {r[0].get<double>(), r[1].get<double>()};
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hex64(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

RunConfig parse_run_config(const std::string& document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: malformed document: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    RunConfig c;
    c.source = document;
    if (!doc.contains("operator")) throw ConfigError("config: missing operator");
    c.op = parse_operator(doc["operator"].dump());
    auto mr = range(doc, "mu_range", {c.mu_lo, c.mu_hi});
    c.mu_lo = mr.first;
    c.mu_hi = mr.second;
    if (!(c.mu_hi > c.mu_lo)) throw ConfigError("config: mu_range is empty");
    c.grid_density = integer(doc, "grid_density", c.grid_density);
    if (c.grid_density < 16) throw ConfigError("config: grid_density must be >= 16");
    if (doc.contains("log_grid")) c.log_grid = doc["log_grid"].get<bool>();
    if (c.log_grid && c.mu_lo <= 0) throw ConfigError("config: log_grid needs mu_range[0] > 0");
    if (doc.contains("tolerances")) {
        const auto& t = doc["tolerances"];
        c.tol.ode_tol = num(t, "ode_tol", c.tol.ode_tol);
        c.tol.band_tol = num(t, "band_tol", c.tol.band_tol);
        c.tol.collision_tol = num(t, "collision_tol", c.tol.collision_tol);
    }
    if (!(c.tol.ode_tol >= 1e-14 && c.tol.ode_tol <= 1e-4)) throw ConfigError("config: ode_tol outside [1e-14, 1e-4]");
    if (!(c.tol.band_tol > 0 && c.tol.band_tol <= 1e-3)) throw ConfigError("config: band_tol outside (0, 1e-3]");
    if (!(c.tol.collision_tol > 0 && c.tol.collision_tol <= 1e-2))
        throw ConfigError("config: collision_tol outside (0, 1e-2]");
    if (doc.contains("test_function")) {
        const auto& t = doc["test_function"];
        c.test_function.kind = t.value("kind", std::string("bump"));
        if (c.test_function.kind != "bump") throw ConfigError("config: test_function.kind must be bump");
        c.test_function.center = num(t, "center", c.test_function.center);
        c.test_function.width = num(t, "width", c.test_function.width);
        c.test_function.support_radius = num(t, "support_radius", c.test_function.support_radius);
        if (!(c.test_function.width > 0 && c.test_function.support_radius > 0))
            throw ConfigError("config: test_function width and support_radius must be positive");
    }
    if (doc.contains("output_dir")) c.output_dir = doc["output_dir"].get<std::string>();
    c.mesh_N = integer(doc, "mesh_N", c.mesh_N);
    if (c.mesh_N < 2) throw ConfigError("config: mesh_N must be >= 2");
    c.threads = integer(doc, "threads", c.threads);
    auto er = range(doc, "eval_range", {c.eval_lo, c.eval_hi});
    c.eval_lo = er.first;
    c.eval_hi = er.second;
    if (!(c.eval_hi > c.eval_lo)) throw ConfigError("config: eval_range is empty");
    if (doc.contains("bloch")) {
        const auto& b = doc["bloch"];
        if (b.contains("t")) c.bloch_t = b["t"].get<std::vector<double>>();
        auto w = range(b, "window", {c.bloch_lo, c.bloch_hi});
        c.bloch_lo = w.first;
        c.bloch_hi = w.second;
    }
    if (doc.contains("sample_mu")) c.sample_mu = doc["sample_mu"].get<std::vector<double>>();
    c.fourier_size = integer(doc, "fourier_size", c.fourier_size);
    if (c.fourier_size < 3 || c.fourier_size % 2 == 0) throw ConfigError("config: fourier_size must be odd and >= 3");
    return c;
}

Bump make_bump(const TestFunctionSpec& s) {
    Bump b;
    b.center = s.center;
    b.width = s.width;
    b.radius = s.support_radius;
    return b;
}

const std::map<std::string, std::vector<std::string>>& csv_schemas() {
    static const std::map<std::string, std::vector<std::string>> s{
        {"monodromy", {"mu_re", "mu_im", "i", "j", "U_re", "U_im"}},
        {"branches", {"mu", "k", "rho_re", "rho_im", "abs_rho"}},
        {"collisions", {"mu_lo", "mu_hi", "k1", "k2", "on_unit_circle"}},
        {"bands", {"k", "j", "mu_lo", "mu_hi", "t_lo", "t_hi", "orientation", "degenerate"}},
        {"mesh", {"k", "j", "t", "mu", "dmu_dt"}},
        {"transform", {"k", "j", "t", "mu", "phi_re", "phi_im", "p", "w"}},
        {"reconstruction", {"x", "f_re", "f_im"}},
        {"spectral_matrix", {"mu", "q", "qp", "M_re", "M_im"}},
        {"spectrum", {"mu_lo", "mu_hi"}},
        {"exceptional_t", {"t"}},
        {"bloch", {"t", "mu", "norm2", "norm2_formula_re", "norm2_formula_im", "norm_rel_err"}},
        {"reconstruct_U", {"mu", "i", "j", "U_rec_re", "U_rec_im", "U_re", "U_im"}},
        {"hill", {"x", "general_re", "general_im", "hill_re", "hill_im"}},
        {"edges", {"index", "mu", "kind"}},
        {"plancherel", {"k", "fhat_re", "fhat_im"}},
    };
    return s;
}

Table make_table(const std::string& schema) {
    auto it = csv_schemas().find(schema);
    if (it == csv_schemas().end()) throw ConfigError("csv: unknown schema " + schema);
    Table t;
    t.header = it->second;
    return t;
}

std::string format_csv(const Table& t) {
    std::ostringstream os;
    for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
    os << "\n";
    for (const auto& row : t.rows) {
        if (row.size() != t.header.size()) throw ConfigError("csv: row width does not match the schema");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ",";
            if (auto p = std::get_if<long long>(&row[i])) os << *p;
            else if (auto d = std::get_if<double>(&row[i])) os << fmt(*d);
            else os << std::get<std::string>(row[i]);
        }
        os << "\n";
    }
    return os.str();
}

void emit_csv(const Table& t, const std::string& schema, const std::string& path) {
    auto it = csv_schemas().find(schema);
    if (it == csv_schemas().end() || it->second != t.header) throw ConfigError("csv: schema mismatch for " + schema);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("csv: cannot write " + path);
    f << format_csv(t);
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<double> fourier_eigenvalues(const OperatorSpec& op, int size, bool antiperiodic) {
    validate(op);
    const int half = size / 2;
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(size, size);
    auto kappa = [&](int a) { return 2.0 * (a - half) + (antiperiodic ? 1.0 : 0.0); };
    for (int a = 0; a < size; ++a) {
        H(a, a) += std::pow(kappa(a), 2 * op.n);
        for (int b = 0; b < size; ++b) {
            const int m = a - b;
            for (int j = 0; j < op.n; ++j) {
                cplx c = op.coeffs[j].coeff(m);
                if (c == cplx(0.0)) continue;
                double sg = (j % 2) ? -1.0 : 1.0;
                H(a, b) += sg * std::pow(kappa(a), j) * std::pow(kappa(b), j) * c;
            }
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + size);
    return ev;
}

std::vector<double> fourier_edges(const OperatorSpec& op, int size) {
    auto p = fourier_eigenvalues(op, size, false), a = fourier_eigenvalues(op, size, true);
    p.insert(p.end(), a.begin(), a.end());
    std::sort(p.begin(), p.end());
    return p;
}

std::vector<cplx> free_multipliers(int n, double mu) {
    OmegaOrder o = omega_order(n);
    std::vector<cplx> out;
    const double lam = std::pow(mu, 1.0 / (2 * n));
    for (cplx w : o.omega) out.push_back(std::exp(w * lam * kPi));
    return out;
}

cplx bump_fourier(const Bump& f, double k) {
    QuadRule q = composite_gauss(16, f.lo(), f.hi(), std::max(16, static_cast<int>(8 * (f.hi() - f.lo()) * (1 + std::abs(k)))));
    cplx s = 0.0;
    for (std::size_t i = 0; i < q.x.size(); ++i) s += q.w[i] * f(q.x[i]) * std::polar(1.0, -k * q.x[i]);
    return s;
}

namespace {

struct Output {
    std::filesystem::path dir;
    json files = json::array();
    json results = json::object();

    void csv(const Table& t, const std::string& schema, const std::string& name) {
        emit_csv(t, schema, (dir / name).string());
        std::ifstream f(dir / name, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        files.push_back({{"name", name}, {"schema", schema}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
    }
};

struct Pipeline {
    StandardForm sf;
    BranchTable table;
    BandAtlas atlas;
};

TrackOptions track_options(const RunConfig& c) {
    TrackOptions o;
    o.ode_tol = c.tol.ode_tol;
    o.collision_tol = c.tol.collision_tol;
    o.grid_points = c.grid_density;
    o.log_grid = c.log_grid;
    o.threads = c.threads;
    return o;
}

Pipeline run_bands(const RunConfig& c) {
    Pipeline p;
    p.sf = expand_standard_form(c.op);
    p.table = track_branches(p.sf, c.mu_lo, c.mu_hi, track_options(c));
    BandOptions bo;
    bo.band_tol = c.tol.band_tol;
    bo.ode_tol = c.tol.ode_tol;
    bo.threads = c.threads;
    p.atlas = detect_bands(p.table, p.sf, bo);
    return p;
}

ExpansionOptions expansion_options(const RunConfig& c) {
    ExpansionOptions e;
    e.mesh_N = c.mesh_N;
    e.ode_tol = c.tol.ode_tol;
    e.threads = c.threads;
    Bump b = make_bump(c.test_function);
    e.cell_lo = std::floor(std::min(c.eval_lo, b.lo()) / kPi) * kPi;
    e.cell_hi = std::ceil(std::max(c.eval_hi, b.hi()) / kPi) * kPi;
    return e;
}

void emit_branches(Output& out, const BranchTable& t) {
    Table b = make_table("branches");
    for (std::size_t i = 0; i < t.size(); ++i)
        for (int k = 0; k < t.branches(); ++k) {
            cplx r = t.rho(k, static_cast<Eigen::Index>(i));
            b.rows.push_back({t.mu[i], (long long)(k + 1), r.real(), r.imag(), std::abs(r)});
        }
    out.csv(b, "branches", "branches.csv");
    Table c = make_table("collisions");
    for (const auto& e : t.collisions)
        c.rows.push_back({e.mu_lo, e.mu_hi, (long long)e.k1, (long long)e.k2, (long long)(e.on_unit_circle ? 1 : 0)});
    out.csv(c, "collisions", "collisions.csv");
}

void emit_atlas(Output& out, const BandAtlas& a) {
    Table b = make_table("bands");
    for (const auto& x : a.bands)
        b.rows.push_back({(long long)x.k, (long long)x.j, x.mu_lo, x.mu_hi, x.t_lo, x.t_hi, (long long)x.orientation,
                          (long long)(x.point ? 1 : 0)});
    out.csv(b, "bands", "bands.csv");
    Table s = make_table("spectrum");
    for (const auto& iv : a.spectrum) s.rows.push_back({iv.lo, iv.hi});
    out.csv(s, "spectrum", "spectrum.csv");
    Table e = make_table("exceptional_t");
    for (double t : a.exceptional_t) e.rows.push_back({t});
    out.csv(e, "exceptional_t", "exceptional_t.csv");
    json inc = json::array();
    for (const auto& x : a.bands)
        if (x.incomplete()) inc.push_back({{"k", x.k}, {"j", x.j}});
    out.results["incomplete_bands"] = inc;
}

void cmd_multipliers(const RunConfig& c, Output& out) {
    StandardForm sf = expand_standard_form(c.op);
    BranchTable t = track_branches(sf, c.mu_lo, c.mu_hi, track_options(c));
    emit_branches(out, t);
    Table m = make_table("monodromy");
    std::vector<double> grid;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t.on_grid[i]) grid.push_back(t.mu[i]);
    std::vector<CMat> U(grid.size());
    double det_defect = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        MonodromyData md = monodromy(sf, grid[i], c.tol.ode_tol);
        U[i] = md.U;
        det_defect = std::max(det_defect, std::abs(det_monodromy(md) - 1.0));
    }
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (int a = 0; a < U[i].rows(); ++a)
            for (int b = 0; b < U[i].cols(); ++b)
                m.rows.push_back({grid[i], 0.0, (long long)a, (long long)b, U[i](a, b).real(), U[i](a, b).imag()});
    out.csv(m, "monodromy", "monodromy.csv");
    out.results["involution_defect"] = involution_check(t);
    out.results["det_defect"] = det_defect;
    out.results["collisions"] = t.collisions.size();
}

void cmd_bands(const RunConfig& c, Output& out) {
    Pipeline p = run_bands(c);
    emit_branches(out, p.table);
    emit_atlas(out, p.atlas);
    Table m = make_table("mesh");
    for (const auto& b : p.atlas.bands) {
        if (b.point || b.incomplete()) continue;
        BandMesh mesh = parametrize_band(p.sf, b, c.mesh_N, c.tol.ode_tol, c.threads);
        for (const auto& nd : mesh.nodes) m.rows.push_back({(long long)b.k, (long long)b.j, nd.t, nd.mu, nd.dmu_dt});
    }
    out.csv(m, "mesh", "mesh.csv");
}

void emit_transform(Output& out, const SpectralGrid& g, const std::vector<cplx>& phi) {
    Table t = make_table("transform");
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const auto& sn = g.nodes[i];
        t.rows.push_back({(long long)sn.k, (long long)sn.j, sn.node.t, sn.node.mu, phi[i].real(), phi[i].imag(), sn.p, sn.w});
    }
    out.csv(t, "transform", "transform.csv");
}

void cmd_expand(const RunConfig& c, Output& out, bool parseval_only) {
    Pipeline p = run_bands(c);
    emit_atlas(out, p.atlas);
    SpectralGrid g = build_spectral_grid(p.sf, p.atlas, expansion_options(c));
    Bump b = make_bump(c.test_function);
    auto f = sample_on_cells(g.cells, [&](double x) { return cplx(b(x)); });
    auto phi = forward_transform(g, f);
    emit_transform(out, g, phi);
    ParsevalResult pr = parseval(g, f);
    out.results["parseval"] = {{"lhs", pr.lhs}, {"rhs", pr.rhs}, {"rel_err", pr.rel_err}};
    if (parseval_only) return;
    auto back = inverse_transform(g, phi);
    Table r = make_table("reconstruction");
    std::vector<cplx> diff(f.size());
    for (int i = 0; i < g.cells.size(); ++i) {
        double x = g.cells.x(i);
        diff[i] = back[i] - f[i];
        if (x >= c.eval_lo && x <= c.eval_hi) r.rows.push_back({x, back[i].real(), back[i].imag()});
    }
    out.csv(r, "reconstruction", "reconstruction.csv");
    out.results["roundtrip_rel_err"] = l2_norm(g.cells, diff) / l2_norm(g.cells, f);
    out.results["conjugacy_defect"] = g.conj_defect;
}

void cmd_bloch(const RunConfig& c, Output& out) {
    Pipeline p = run_bands(c);
    Table t = make_table("bloch");
    double worst = 0.0, orth = 0.0;
    for (double tv : c.bloch_t) {
        BlochResult r = bloch_eigs(p.sf, p.atlas, tv, c.bloch_lo, c.bloch_hi, c.tol.ode_tol, true, c.threads);
        for (const auto& e : r.eigs) {
            t.rows.push_back({tv, e.mu, e.norm2, e.norm2_formula.real(), e.norm2_formula.imag(), e.norm_rel_err});
            worst = std::max(worst, e.norm_rel_err);
        }
        orth = std::max(orth, r.orthogonality_defect);
    }
    out.csv(t, "bloch", "bloch.csv");
    out.results["max_norm_rel_err"] = worst;
    out.results["max_orthogonality_defect"] = orth;
}

void cmd_spectral_matrix(const RunConfig& c, Output& out) {
    Pipeline p = run_bands(c);
    Table t = make_table("spectral_matrix");
    json per = json::array();
    for (double mu : c.sample_mu) {
        SpectralMatrixSample s = spectral_matrix(p.sf, p.atlas, mu, c.tol.ode_tol);
        for (int q = 0; q < s.M.rows(); ++q)
            for (int qp = 0; qp < s.M.cols(); ++qp)
                t.rows.push_back({mu, (long long)q, (long long)qp, s.M(q, qp).real(), s.M(q, qp).imag()});
        per.push_back({{"mu", mu}, {"hermitian_defect", s.hermitian_defect}, {"min_eigenvalue", s.min_eigenvalue},
                       {"rank", s.rank}, {"branches", s.branches}});
    }
    out.csv(t, "spectral_matrix", "spectral_matrix.csv");
    out.results["samples"] = per;
}

void cmd_reconstruct(const RunConfig& c, Output& out) {
    StandardForm sf = expand_standard_form(c.op);
    Table t = make_table("reconstruct_U");
    json per = json::array();
    for (double mu : c.sample_mu) {
        Reconstruction r = reconstruct_U(sf, mu, c.tol.ode_tol);
        for (int i = 0; i < r.U_rec.rows(); ++i)
            for (int j = 0; j < r.U_rec.cols(); ++j)
                t.rows.push_back({mu, (long long)i, (long long)j, r.U_rec(i, j).real(), r.U_rec(i, j).imag(),
                                  r.U_direct(i, j).real(), r.U_direct(i, j).imag()});
        per.push_back({{"mu", mu}, {"rel_err", r.rel_err}, {"cond", r.cond}});
    }
    out.csv(t, "reconstruct_U", "reconstruct_U.csv");
    out.results["samples"] = per;
}

void cmd_hill(const RunConfig& c, Output& out) {
    Pipeline p = run_bands(c);
    HillComparison h = hill_compare(p.sf, p.atlas, make_bump(c.test_function), expansion_options(c));
    Table t = make_table("hill");
    double dev = 0.0;
    for (std::size_t i = 0; i < h.x.size(); ++i) {
        if (h.x[i] < c.eval_lo || h.x[i] > c.eval_hi) continue;
        t.rows.push_back({h.x[i], h.general[i].real(), h.general[i].imag(), h.hill[i].real(), h.hill[i].imag()});
        dev = std::max(dev, std::abs(h.general[i] - h.hill[i]));
    }
    out.csv(t, "hill", "hill.csv");
    out.results["max_deviation"] = dev;
}

void cmd_oracle(const RunConfig& c, const std::string& kind, Output& out) {
    if (kind == "mathieu-edges" || kind == "fourier-edges") {
        Table t = make_table("edges");
        auto per = fourier_eigenvalues(c.op, c.fourier_size, false);
        auto anti = fourier_eigenvalues(c.op, c.fourier_size, true);
        std::vector<std::pair<double, std::string>> all;
        for (double v : per) all.emplace_back(v, "periodic");
        for (double v : anti) all.emplace_back(v, "antiperiodic");
        std::sort(all.begin(), all.end());
        for (std::size_t i = 0; i < all.size(); ++i) t.rows.push_back({(long long)i, all[i].first, all[i].second});
        out.csv(t, "edges", "edges.csv");
    } else if (kind == "free-multipliers") {
        Table t = make_table("branches");
        for (double mu : make_grid(c.mu_lo, c.mu_hi, c.grid_density, c.log_grid)) {
            auto r = free_multipliers(c.op.n, mu);
            for (std::size_t k = 0; k < r.size(); ++k)
                t.rows.push_back({mu, (long long)(k + 1), r[k].real(), r[k].imag(), std::abs(r[k])});
        }
        out.csv(t, "branches", "free_multipliers.csv");
    } else if (kind == "plancherel") {
        Bump b = make_bump(c.test_function);
        Table t = make_table("plancherel");
        QuadRule q = composite_gauss(16, 0.0, 12.0 / b.width, 64);
        double spec = 0.0;
        for (std::size_t i = 0; i < q.x.size(); ++i) {
            cplx fh = bump_fourier(b, q.x[i]);
            spec += q.w[i] * std::norm(fh) / std::numbers::pi;  // both signs of k, real f
            t.rows.push_back({q.x[i], fh.real(), fh.imag()});
        }
        QuadRule x = composite_gauss(16, b.lo(), b.hi(), 64);
        double l2 = 0.0;
        for (std::size_t i = 0; i < x.x.size(); ++i) l2 += x.w[i] * b(x.x[i]) * b(x.x[i]);
        out.csv(t, "plancherel", "plancherel.csv");
        out.results["l2_norm2"] = l2;
        out.results["spectral_norm2"] = spec;
        out.results["rel_err"] = std::abs(l2 - spec) / l2;
    } else {
        throw ConfigError("oracle: unknown kind " + kind + " (mathieu-edges, fourier-edges, free-multipliers, plancherel)");
    }
}

}  // namespace

int run_command(int argc, char** argv) {
    CLI::App app{"Floquet spectral analysis of periodic self-adjoint operators"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path, out_dir;
    int threads = -1;
    app.add_option("--config", config_path, "run configuration (JSON)")->required();
    app.add_option("--out", out_dir, "output directory (overrides output_dir)");
    app.add_option("--threads", threads, "worker threads, 0 = auto");
    const std::vector<std::pair<std::string, std::string>> commands{
        {"multipliers", "track multiplier branches, collisions and monodromy matrices"},
        {"bands", "band atlas, spectrum and band meshes"},
        {"expand", "forward and inverse transform of the test function"},
        {"parseval", "Parseval check for the test function"},
        {"bloch", "Bloch eigenpairs and the norm identity"},
        {"spectral-matrix", "spectral matrix at sample_mu"},
        {"reconstruct", "monodromy reconstruction at sample_mu"},
        {"hill-check", "general expansion against the Hill formula (n = 1)"},
        {"oracle", "built-in reference values"}};
    std::vector<std::string> names;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [n, d] : commands) {
        names.push_back(n);
        subs[n] = app.add_subcommand(n, d);
    }
    std::string oracle_kind;
    subs["oracle"]->add_option("kind", oracle_kind, "mathieu-edges | fourier-edges | free-multipliers | plancherel")
        ->required();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    std::string cmd;
    for (const auto& n : names)
        if (subs[n]->parsed()) cmd = n;

    const auto t0 = std::chrono::steady_clock::now();
    try {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot read config " + config_path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        RunConfig cfg = parse_run_config(text);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (threads >= 0) cfg.threads = threads;
        Output out;
        out.dir = cfg.output_dir;
        std::filesystem::create_directories(out.dir);

        if (cmd == "multipliers") cmd_multipliers(cfg, out);
        else if (cmd == "bands") cmd_bands(cfg, out);
        else if (cmd == "expand") cmd_expand(cfg, out, false);
        else if (cmd == "parseval") cmd_expand(cfg, out, true);
        else if (cmd == "bloch") cmd_bloch(cfg, out);
        else if (cmd == "spectral-matrix") cmd_spectral_matrix(cfg, out);
        else if (cmd == "reconstruct") cmd_reconstruct(cfg, out);
        else if (cmd == "hill-check") cmd_hill(cfg, out);
        else cmd_oracle(cfg, oracle_kind, out);

        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json manifest = {{"command", cmd == "oracle" ? cmd + " " + oracle_kind : cmd},
                         {"version", kVersion},
                         {"config_path", config_path},
                         {"config", json::parse(text)},
                         {"threads", cfg.threads},
                         {"wall_time_s", wall},
                         {"results", out.results},
                         {"files", out.files}};
        std::ofstream mf(out.dir / "manifest.json");
        mf << manifest.dump(2) << "\n";
        std::cout << cmd << ": " << out.results.dump() << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace floquet
