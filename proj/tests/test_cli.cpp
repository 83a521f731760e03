#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <mismatch/csv.hpp>

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string cli_bin() {
    const char* bin = std::getenv("MISMATCH_CLI_BIN");
    REQUIRE(bin != nullptr);
    return bin;
}

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    std::filesystem::path tmp =
        std::filesystem::temp_directory_path() / ("mismatch_cli_" + std::to_string(counter++) + ".out");
    std::string cmd = "\"" + cli_bin() + "\" " + args + " > " + tmp.string() + " 2>&1";
    int status = std::system(cmd.c_str());
    CliResult res;
    res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream f(tmp);
    std::stringstream ss;
    ss << f.rdbuf();
    res.out = ss.str();
    std::filesystem::remove(tmp);

    std::istringstream lines(res.out);
    std::string line;
    bool first = true;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields = mismatch::detail::split_fields(line);
        if (first) {
            res.header = fields;
            first = false;
        } else {
            res.rows.push_back(fields);
        }
    }
    return res;
}

double field(const CliResult& r, std::size_t row, const std::string& name) {
    for (std::size_t c = 0; c < r.header.size(); ++c)
        if (r.header[c] == name) return mismatch::parse_number(r.rows[row][c]);
    FAIL("no column '" + name + "'");
    return 0.0;
}

std::string text_field(const CliResult& r, std::size_t row, const std::string& name) {
    for (std::size_t c = 0; c < r.header.size(); ++c)
        if (r.header[c] == name) return r.rows[row][c];
    FAIL("no column '" + name + "'");
    return "";
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

}  // namespace

TEST_CASE("rates sweep: header, zero-radius collapse, monotonicity") {
    CliResult r = run_cli(
        "rates --r-grid 0.0,0.005,0.01 --solver chi2,exact-kl --ensemble iid --jobs 1");
    REQUIRE(r.code == 0);
    CHECK(join(r.header) ==
          "r,method,ensemble,value,s_star,feasible,feasibility_radius,attained_distance,"
          "I_MI,error");
    REQUIRE(r.rows.size() == 6);

    std::map<std::string, std::vector<double>> by_method;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        CHECK(text_field(r, i, "error").empty());
        by_method[text_field(r, i, "method")].push_back(field(r, i, "value"));
        // 12 significant digits survive the round trip
        CHECK(std::abs(field(r, i, "I_MI") - 0.6002903006706857) < 1e-12);
        if (field(r, i, "r") == 0.0) {
            CHECK(std::abs(field(r, i, "value") - 0.6002903006706857) < 1e-9);
            CHECK(std::abs(field(r, i, "s_star") - 1.0) < 1e-3);
        } else {
            CHECK(std::abs(field(r, i, "attained_distance") - field(r, i, "r")) < 1e-8);
        }
    }
    for (const auto& [method, vals] : by_method) {
        REQUIRE(vals.size() == 3);
        CHECK(vals[0] >= vals[1]);
        CHECK(vals[1] >= vals[2]);
    }
}

TEST_CASE("rates sweep: bounds rows and worst-channel mutual information") {
    CliResult r = run_cli(
        "rates --r-grid 0.01 --solver chi2,bounds --ensemble iid --worst-mi --jobs 1");
    REQUIRE(r.code == 0);
    CHECK(join(r.header) ==
          "r,method,ensemble,value,s_star,feasible,feasibility_radius,attained_distance,"
          "I_MI,worst_MI,error");
    REQUIRE(r.rows.size() == 2);

    double chi2_value = mismatch::kNaN, bound = mismatch::kNaN;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        if (text_field(r, i, "method") == "chi2") {
            chi2_value = field(r, i, "value");
            double wmi = field(r, i, "worst_MI");
            CHECK(wmi > 0.0);
            CHECK(wmi < std::log(3.0));
        } else {
            CHECK(text_field(r, i, "method") == "lower-bound");
            bound = field(r, i, "value");
            CHECK(text_field(r, i, "feasible").empty());
        }
    }
    CHECK(bound <= chi2_value + 1e-9);
}

TEST_CASE("rates sweep is deterministic and job-count independent") {
    std::string args = "rates --r-grid 0.002,0.01 --solver chi2,exact-kl --ensemble iid,cc";
    CliResult a = run_cli(args + " --jobs 1");
    CliResult b = run_cli(args + " --jobs 1");
    CliResult c = run_cli(args + " --jobs 4");
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out == c.out);
}

TEST_CASE("exponent sweep: header and matched endpoint") {
    CliResult r = run_cli(
        "exponents --r-grid 0.0,0.01 --rho 0.7 --solver chi2,exact-kl --ensemble iid,cost "
        "--jobs 1");
    REQUIRE(r.code == 0);
    CHECK(join(r.header) == "r,method,ensemble,rho,E0,error");
    REQUIRE(r.rows.size() == 8);

    std::map<std::string, std::vector<double>> by_key;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        CHECK(text_field(r, i, "error").empty());
        CHECK(field(r, i, "rho") == 0.7);
        std::string key = text_field(r, i, "method") + "/" + text_field(r, i, "ensemble");
        by_key[key].push_back(field(r, i, "E0"));
        if (field(r, i, "r") == 0.0 && text_field(r, i, "ensemble") == "iid")
            CHECK(std::abs(field(r, i, "E0") - 0.335541058379335) < 1e-6);
    }
    for (const auto& [key, vals] : by_key) {
        REQUIRE(vals.size() == 2);
        CHECK(vals[0] >= vals[1] - 1e-9);
    }
    // cost tilts dominate iid at equal (method, r)
    for (std::size_t i = 0; i + 1 < r.rows.size(); i += 2)
        CHECK(field(r, i + 1, "E0") >= field(r, i, "E0") - 1e-9);
}

TEST_CASE("exponent sweep with a rate target") {
    CliResult r = run_cli(
        "exponents --r-grid 0.01 --rho 0.7 --solver exact-kl --ensemble iid --rate 0.1 "
        "--jobs 1");
    REQUIRE(r.code == 0);
    CHECK(join(r.header) == "r,method,ensemble,rho,E0,R,exponent,rho_star,error");
    REQUIRE(r.rows.size() == 1);
    CHECK(field(r, 0, "R") == 0.1);
    CHECK(std::abs(field(r, 0, "exponent") - 0.222332131076) < 1e-6);
    CHECK(std::abs(field(r, 0, "rho_star") - 1.0) < 1e-3);
}

TEST_CASE("gaussian sweep: header and frozen closed-form values") {
    CliResult r = run_cli("gaussian --gamma 1 --r-grid 0.0,0.01 --jobs 1");
    REQUIRE(r.code == 0);
    CHECK(join(r.header) == "r,I_GMI_worst,I_GMI_approx,I_cost,I_Gauss_additive,error");
    REQUIRE(r.rows.size() == 2);

    CHECK(std::abs(field(r, 0, "I_GMI_worst") - 0.34657359027997264) < 1e-9);
    CHECK(std::abs(field(r, 0, "I_GMI_approx") - 0.34657359027997264) < 1e-12);
    CHECK(std::abs(field(r, 0, "I_Gauss_additive") - 0.34657359027997264) < 1e-12);

    CHECK(std::abs(field(r, 1, "I_GMI_approx") - 0.2599710499015288) < 1e-12);
    CHECK(std::abs(field(r, 1, "I_Gauss_additive") - 0.3030679017851578) < 1e-12);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(field(r, i, "I_GMI_worst") >= field(r, i, "I_GMI_approx") - 1e-9);
        CHECK(field(r, i, "I_cost") >= field(r, i, "I_GMI_worst") - 1e-9);
    }
}

TEST_CASE("gaussian sweep with the exact additive column") {
    CliResult r = run_cli("gaussian --gamma 1 --r-grid 0.05 --exact-additive --jobs 1");
    REQUIRE(r.code == 0);
    CHECK(join(r.header) ==
          "r,I_GMI_worst,I_GMI_approx,I_cost,I_Gauss_additive,I_additive_exact,error");
    REQUIRE(r.rows.size() == 1);
    double exact = field(r, 0, "I_additive_exact");
    CHECK(std::abs(exact - 0.5 * std::log1p(1.0 / 1.6936)) < 2e-3);
    CHECK(exact <= field(r, 0, "I_Gauss_additive") + 1e-9);
}

TEST_CASE("worst-noise table: summary row and samples") {
    CliResult r = run_cli("worst-noise --r 0.05 --z-grid lin:-5:5:11");
    REQUIRE(r.code == 0);
    CHECK(join(r.header) ==
          "row_type,z,kl_density,chi2_density,z0,lambda,rho,kl_second_moment,"
          "chi2_second_moment");
    REQUIRE(r.rows.size() == 12);
    CHECK(text_field(r, 0, "row_type") == "summary");
    CHECK(std::abs(field(r, 0, "z0") - 3.6017) < 0.01);
    CHECK(std::abs(field(r, 0, "kl_second_moment") - 1.6936) < 0.005);
    CHECK(std::abs(field(r, 0, "chi2_second_moment") - (1.0 + 2.0 * std::sqrt(0.05))) <
          1e-9);

    // outside the modified region the kl density equals the center
    for (std::size_t i = 1; i < r.rows.size(); ++i) {
        CHECK(text_field(r, i, "row_type") == "sample");
        double z = field(r, i, "z");
        double kd = field(r, i, "kl_density");
        double cd = field(r, i, "chi2_density");
        CHECK(kd > 0.0);
        double center = std::exp(-0.5 * z * z) / std::sqrt(2.0 * mismatch::kPi);
        double sr = std::sqrt(0.05);
        CHECK(std::abs(cd - center * (1.0 + sr * (z * z - 1.0))) < 1e-12);
        if (std::abs(z) > 3.7) CHECK(std::abs(kd - center) < 1e-12);
    }
}

TEST_CASE("configuration errors exit with code 2") {
    CHECK(run_cli("rates --no-such-flag").code == 2);
    CHECK(run_cli("rates --instance no-such-instance").code == 2);
    CHECK(run_cli("rates --r-grid 0.01,0.005").code == 2);
    CHECK(run_cli("rates --r-grid lin:0:1:1").code == 2);
    CHECK(run_cli("exponents --rho 1.5").code == 2);
    CHECK(run_cli("rates --instance files").code == 2);
    CHECK(run_cli("").code == 2);
}

TEST_CASE("solver failures exit with code 3 and keep the row") {
    CliResult r = run_cli("exponents --solver exact-kl --ensemble iid --rho 1 --r-grid 120");
    REQUIRE(r.code == 3);
    REQUIRE(r.rows.size() == 1);
    CHECK(text_field(r, 0, "E0").empty());
    CHECK_FALSE(text_field(r, 0, "error").empty());
}

TEST_CASE("output lands in the requested file") {
    std::filesystem::path out =
        std::filesystem::temp_directory_path() / "mismatch_cli_outfile.csv";
    std::filesystem::remove(out);
    CliResult r = run_cli("gaussian --gamma 1 --r-grid 0.0,0.001 --out " + out.string());
    REQUIRE(r.code == 0);
    CHECK(r.out.find("2 rows ->") != std::string::npos);
    std::ifstream f(out);
    REQUIRE(f.good());
    std::string header;
    std::getline(f, header);
    CHECK(header == "r,I_GMI_worst,I_GMI_approx,I_cost,I_Gauss_additive,error");
    std::filesystem::remove(out);
}
