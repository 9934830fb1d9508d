#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "floquet/cli_io.hpp"

using namespace floquet;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("floquet_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "floquet");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_command(static_cast<int>(argv.size()), argv.data());
}

std::string read(const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> rows(const std::string& csv) {
    std::vector<std::vector<std::string>> out;
    std::stringstream ss(csv);
    std::string line;
    while (std::getline(ss, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        out.push_back(cells);
    }
    return out;
}

const char* kFreeHill = R"({"operator":{"n":1,"coefficients":[[]]},"mu_range":[-1,30],
  "tolerances":{"ode_tol":1e-13},"grid_density":200})";
const char* kMathieu = R"({"operator":{"n":1,"coefficients":[[{"m":1,"re":1,"im":0},{"m":-1,"re":1,"im":0}]]},
  "mu_range":[-1,60],"grid_density":300,"mesh_N":12})";

std::filesystem::path write_config(const std::filesystem::path& dir, const std::string& text) {
    auto p = dir / "config.json";
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST_CASE("csv schemas") {
    CHECK(format_csv(make_table("branches")) == "mu,k,rho_re,rho_im,abs_rho\n");
    CHECK(format_csv(make_table("collisions")) == "mu_lo,mu_hi,k1,k2,on_unit_circle\n");
    CHECK(format_csv(make_table("monodromy")) == "mu_re,mu_im,i,j,U_re,U_im\n");
    Table t = make_table("mesh");
    t.rows.push_back({1LL, 2LL, 0.1, 1.0 / 3.0, -2.0});
    CHECK(format_csv(t) == "k,j,t,mu,dmu_dt\n1,2,0.10000000000000001,0.33333333333333331,-2\n");
    t.rows.push_back({1LL});
    CHECK_THROWS_AS(format_csv(t), ConfigError);
    CHECK_THROWS_AS(make_table("nope"), ConfigError);
}

TEST_CASE("fnv-1a 64") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("config parsing and validation") {
    RunConfig c = parse_run_config(kMathieu);
    CHECK(c.op.n == 1);
    CHECK(c.mu_lo == -1.0);
    CHECK(c.grid_density == 300);
    CHECK(c.mesh_N == 12);
    CHECK_THROWS_AS(parse_run_config("[1,2]"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"mu_range":[0,1]})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"operator":{"n":1,"coefficients":[[]]},"grid_density":8})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"operator":{"n":1,"coefficients":[[]]},"mu_range":[3,1]})"), ConfigError);
    CHECK_THROWS_AS(
        parse_run_config(R"({"operator":{"n":1,"coefficients":[[]]},"tolerances":{"ode_tol":1e-20}})"), ConfigError);
    CHECK_THROWS_AS(
        parse_run_config(R"({"operator":{"n":1,"coefficients":[[]]},"mu_range":[0,5],"log_grid":true})"),
        ConfigError);
}

TEST_CASE("Fourier oracle: free operator eigenvalues are squares") {
    auto e = fourier_edges(free_operator(1), 11);
    CHECK(e[0] == doctest::Approx(0.0));
    CHECK(e[1] == doctest::Approx(1.0));
    CHECK(e[2] == doctest::Approx(1.0));
    CHECK(e[3] == doctest::Approx(4.0));
}

TEST_CASE("bump Fourier transform of a narrow bump is nearly Gaussian") {
    Bump b;
    b.width = 0.5;
    b.radius = 40.0;
    for (double k : {0.0, 1.0, 3.0})
        CHECK(std::abs(bump_fourier(b, k)) ==
              doctest::Approx(std::sqrt(2 * std::numbers::pi) * 0.5 * std::exp(-0.125 * k * k)).epsilon(1e-3));
}

TEST_CASE("bands command on free Hill writes edges at m^2 and a manifest") {
    auto dir = scratch("bands");
    auto cfg = write_config(dir, kFreeHill);
    REQUIRE(run({"bands", "--config", cfg.string(), "--out", dir.string()}) == 0);
    auto r = rows(read(dir / "bands.csv"));
    REQUIRE(r.size() > 4);
    CHECK(r[0] == std::vector<std::string>{"k", "j", "mu_lo", "mu_hi", "t_lo", "t_hi", "orientation", "degenerate"});
    for (std::size_t i = 1; i <= 4; ++i) {
        double lo = std::stod(r[i][2]);
        double m = i - 1.0;
        CHECK(std::abs(lo - m * m) < 1e-8);
    }
    auto manifest = nlohmann::json::parse(read(dir / "manifest.json"));
    CHECK(manifest["command"] == "bands");
    for (const auto& f : manifest["files"]) {
        std::string bytes = read(dir / f["name"].get<std::string>());
        char hex[20];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
        CHECK(f["fnv1a64"] == hex);
    }
    auto mesh = rows(read(dir / "mesh.csv"));
    CHECK(mesh.size() > 1);
}

TEST_CASE("parseval command on Mathieu") {
    auto dir = scratch("parseval");
    auto cfg = write_config(dir, kMathieu);
    REQUIRE(run({"parseval", "--config", cfg.string(), "--out", dir.string()}) == 0);
    auto manifest = nlohmann::json::parse(read(dir / "manifest.json"));
    CHECK(manifest["results"]["parseval"]["rel_err"].get<double>() <= 1e-3);
    auto t = rows(read(dir / "transform.csv"));
    CHECK(t[0] == std::vector<std::string>{"k", "j", "t", "mu", "phi_re", "phi_im", "p", "w"});
}

TEST_CASE("oracle mathieu-edges") {
    auto dir = scratch("oracle");
    auto cfg = write_config(dir, kMathieu);
    REQUIRE(run({"oracle", "mathieu-edges", "--config", cfg.string(), "--out", dir.string()}) == 0);
    auto r = rows(read(dir / "edges.csv"));
    REQUIRE(r.size() == 83);
    CHECK(std::stod(r[1][1]) == doctest::Approx(-0.4551386041).epsilon(1e-9));
    CHECK(r[1][2] == "periodic");
    CHECK(r[2][2] == "antiperiodic");
}

TEST_CASE("exit codes") {
    auto dir = scratch("exit");
    auto bad = write_config(dir, R"({"operator":{"n":1,"coefficients":[[]]},"grid_density":3})");
    CHECK(run({"bands", "--config", bad.string(), "--out", dir.string()}) == 2);
    CHECK(run({"bands", "--config", (dir / "missing.json").string()}) == 2);
    CHECK(run({"bands"}) == 2);
    auto far = write_config(dir, R"({"operator":{"n":1,"coefficients":[[]]},"mu_range":[-1e9,-1e8]})");
    CHECK(run({"multipliers", "--config", far.string(), "--out", dir.string()}) == 1);
}
