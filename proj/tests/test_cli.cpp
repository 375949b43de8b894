#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "brtlab/experiment.hpp"
#include "brtlab/parallel.hpp"

using namespace brt;
namespace fs = std::filesystem;

namespace {

fs::path artifacts() {
    fs::path dir = fs::current_path() / "cli_artifacts";
    fs::create_directories(dir);
    return dir;
}

// run the installed binary through the shell, capturing stdout+stderr
int run_cli(const std::string& args, const fs::path& capture) {
    std::string cmd = "\"" BRT_CLI_PATH "\" " + args + " > \"" + capture.string() + "\" 2>&1";
    int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

// CSV payload without the embedded-config comments
std::string data_lines(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') out += line + "\n";
    return out;
}

struct ModeGuard {
    ExecMode saved = exec_mode();
    ~ModeGuard() { set_exec_mode(saved); }
};

}  // namespace

TEST_CASE("config round trip") {
    ExperimentConfig c;
    c.command = "brt";
    c.chart = "band:kappa=1+0.5*cos(x1)";
    c.sigma = {0.25, -1.0, 2.5};
    c.E_level = "cos(x1)";
    c.field = "x0^2*cos(x1)";
    c.weight = "1+x0";
    c.atten = 0.3;
    c.k = 2;
    c.eps_max = 0.0625;
    c.eps_count = 7;
    c.eps = 0.015625;
    c.duration = 3.7;
    c.serial = true;
    c.mode = "witness";
    c.planar_field = "annulus";
    c.planar_field_g = "square:0.25";
    c.bins = 4;
    c.lambda_count = 16;
    c.mu = 1.5;
    c.shift_re = -0.5;
    c.shift_im = 0.375;
    c.integrator.step_divisor = 48;
    c.integrator.max_step = 0.0125;
    c.integrator.event_tol = 1e-12;
    c.integrator.speed_tol = 1e-7;
    c.integrator.escape_frac = 0.875;
    c.out_csv = "report.csv";
    c.out_svg = "figure.svg";

    std::string text = serialize_config(c);
    ExperimentConfig d = parse_config(text);
    CHECK(serialize_config(d) == text);
    CHECK(d.chart == c.chart);
    CHECK(d.sigma == c.sigma);
    CHECK(d.field == c.field);
    CHECK(d.atten == c.atten);
    CHECK(d.k == c.k);
    CHECK(d.eps == c.eps);
    CHECK(d.duration == c.duration);
    CHECK(d.serial == c.serial);
    CHECK(d.shift_im == c.shift_im);
    CHECK(d.integrator.event_tol == c.integrator.event_tol);
    CHECK(d.out_svg == c.out_svg);

    SUBCASE("comments and blank lines are ignored") {
        ExperimentConfig e = parse_config("# note\n\n[experiment]\nk = 3\n");
        CHECK(e.k == 3);
        CHECK(e.chart == "disk");
    }

    SUBCASE("malformed input") {
        CHECK_THROWS_AS(parse_config("nonsense"), std::invalid_argument);
        CHECK_THROWS_AS(parse_config("[weird]\n"), std::invalid_argument);
        CHECK_THROWS_AS(parse_config("[experiment\n"), std::invalid_argument);
        CHECK_THROWS_AS(parse_config("[experiment]\nfoo = 1\n"), std::invalid_argument);
        CHECK_THROWS_AS(parse_config("[experiment]\nk = 1.5\n"), std::invalid_argument);
        CHECK_THROWS_AS(parse_config("[experiment]\neps = abc\n"), std::invalid_argument);
        CHECK_THROWS_AS(parse_config("[experiment]\nsigma = \n"), std::invalid_argument);
        CHECK_THROWS_AS(parse_config("[laplace]\nshift = 1,2,3\n"), std::invalid_argument);
        CHECK_THROWS_AS(parse_config("k = 1\n"), std::invalid_argument);
    }
}

TEST_CASE("run maps reports to exit codes in process") {
    ModeGuard guard;
    std::ostringstream out, err;

    ExperimentConfig c;
    c.command = "laplace";
    c.mode = "witness";
    c.planar_field = "annulus";
    CHECK(run(c, out, err) == 0);
    CHECK(contains(out.str(), "in kernel"));

    c.planar_field = "two-squares";
    std::ostringstream out2;
    CHECK(run(c, out2, err) == 1);
    CHECK(contains(out2.str(), "NOT in kernel"));

    // setup problems propagate so the CLI wrapper can report usage errors
    c.planar_field = "dodecahedron";
    CHECK_THROWS_AS(run(c, out, err), std::invalid_argument);
    c.mode = "frobnicate";
    CHECK_THROWS_AS(run(c, out, err), std::invalid_argument);

    ExperimentConfig b;
    b.command = "brt";
    b.sigma = {0.0, 1.0, 1.0};
    b.eps = 0.25;
    std::ostringstream out3;
    CHECK(run(b, out3, err) == 0);
    CHECK(contains(out3.str(), "brt = "));

    b.field = "x0++";
    CHECK_THROWS_AS(run(b, out, err), ExprError);
    b.field = "x0";
    b.chart = "torus";
    CHECK_THROWS_AS(run(b, out, err), ChartError);

    ExperimentConfig u;
    u.command = "frobnicate";
    CHECK_THROWS_AS(run(u, out, err), std::invalid_argument);
}

TEST_CASE("selftest passes and reruns byte-identically") {
    fs::path dir = artifacts();
    // same --out both times: the CSV embeds its own path in the config echo
    fs::path csv = dir / "self.csv", csv_c = dir / "self_c.csv";

    int rc1 = run_cli("selftest --out \"" + csv.string() + "\"", dir / "self_a.txt");
    std::string first_csv = slurp(csv);
    int rc2 = run_cli("selftest --out \"" + csv.string() + "\"", dir / "self_b.txt");
    REQUIRE(rc1 == 0);
    REQUIRE(rc2 == 0);

    std::string txt = slurp(dir / "self_a.txt");
    CHECK(contains(txt, "[PASS] disk-chord"));
    CHECK(contains(txt, "[PASS] laplace-bins"));
    CHECK(contains(txt, "selftest passed"));
    CHECK_FALSE(contains(txt, "[FAIL]"));
    CHECK(txt == slurp(dir / "self_b.txt"));
    CHECK(first_csv == slurp(csv));

    // the serial map computes the same numbers; only the embedded config
    // comment records the flag
    int rc3 = run_cli("selftest --serial --out \"" + csv_c.string() + "\"", dir / "self_c.txt");
    REQUIRE(rc3 == 0);
    CHECK(slurp(dir / "self_c.txt") == txt);
    CHECK(data_lines(slurp(csv_c)) == data_lines(first_csv));
}

TEST_CASE("usage and failure exit codes") {
    fs::path dir = artifacts();
    fs::path log = dir / "exit_codes.txt";

    CHECK(run_cli("brt --chart disk --sigma 0,1,1 --field 'x0++'", log) == 2);
    CHECK(contains(slurp(log), "expression error"));

    CHECK(run_cli("trace --chart torus --sigma 0,1,1", log) == 2);
    CHECK(contains(slurp(log), "chart error"));

    CHECK(run_cli("--config /nonexistent/path.cfg", log) == 2);
    CHECK(run_cli("definitely-not-a-subcommand", log) == 2);
    CHECK(run_cli("", log) == 2);
    CHECK(run_cli("brt --sigma 1,1", log) == 2);
    CHECK(run_cli("laplace --mode bogus", log) == 2);
    CHECK(run_cli("--help", log) == 0);

    // declared tolerance violated -> 1 (a non-symmetric field is not in the
    // kernel of the transform)
    CHECK(run_cli("laplace --mode witness --planar-field two-squares", log) == 1);

    // runtime failure -> 3 (flat boundary is never admissible)
    CHECK(run_cli("reconstruct --chart flat --sigma 0,1,1 --eps-max 0.125 --eps-count 4", log) == 3);
    CHECK(contains(slurp(log), "reconstruct error"));
}

TEST_CASE("csv and svg artifacts") {
    fs::path dir = artifacts();

    SUBCASE("brt report embeds the run configuration") {
        fs::path csv = dir / "brt.csv";
        int rc = run_cli("brt --chart disk --sigma 0,1,1 --eps 0.25 --field x0 --out \"" +
                             csv.string() + "\"",
                         dir / "brt.txt");
        REQUIRE(rc == 0);
        std::string body = slurp(csv);
        CHECK(contains(body, "# run configuration:"));
        CHECK(contains(body, "# command = brt"));
        CHECK(contains(body, "# eps = 0.25"));
        CHECK(contains(body, "integral,duration,reflections,launch_energy,max_speed_err"));
        // E(0) = eps^2 / 2 lands in the data row
        CHECK(contains(data_lines(body), "0.03125"));
    }

    SUBCASE("trace writes samples and a figure") {
        fs::path csv = dir / "trace.csv", svg = dir / "trace.svg";
        int rc = run_cli("trace --chart disk --sigma 0,1,6.2832 --eps 0.25 --out \"" +
                             csv.string() + "\" --svg \"" + svg.string() + "\"",
                         dir / "trace.txt");
        REQUIRE(rc == 0);
        CHECK(contains(slurp(dir / "trace.txt"), "reflections"));
        std::string body = slurp(csv);
        CHECK(contains(body, "t,x0,x1,v0,v1,is_event"));
        int rows = 0;
        std::istringstream in(data_lines(body));
        for (std::string line; std::getline(in, line);)
            if (!line.empty()) ++rows;
        CHECK(rows > 100);

        std::string fig = slurp(svg);
        CHECK(contains(fig, "<svg"));
        CHECK(contains(fig, "polyline"));
    }

    SUBCASE("flags override the config file") {
        ExperimentConfig c;
        c.command = "brt";
        c.sigma = {0.0, 1.0, 1.0};
        c.eps = 0.25;
        fs::path cfg = dir / "override.cfg";
        std::ofstream(cfg) << serialize_config(c);

        fs::path csv = dir / "override.csv";
        int rc = run_cli("--config \"" + cfg.string() + "\" brt --eps 0.125 --out \"" +
                             csv.string() + "\"",
                         dir / "override.txt");
        REQUIRE(rc == 0);
        std::string body = slurp(csv);
        CHECK(contains(body, "# eps = 0.125"));
        CHECK_FALSE(contains(body, "# eps = 0.25"));
        CHECK(contains(data_lines(body), "0.0078125"));
    }
}
