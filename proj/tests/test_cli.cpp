#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string cli = DDEL_CLI_PATH;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("ddel_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

RunResult run(const std::string& args, const fs::path& dir) {
    const fs::path out_file = dir / "_stdout.txt";
    const fs::path err_file = dir / "_stderr.txt";
    const std::string cmd =
        cli + " " + args + " > " + out_file.string() + " 2> " + err_file.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = (status >= 0) ? ((status >> 8) & 0xff) : -1;
    r.out = read_text(out_file);
    r.err = read_text(err_file);
    return r;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return json::parse(in);
}

int data_rows(const fs::path& csv) {
    std::ifstream in(csv);
    REQUIRE(in.good());
    int lines = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++lines;
    return lines - 1;  // minus the header
}

json without_timing(json j) {
    j.erase("timing");
    return j;
}

std::string bar_config(const std::string& out_dir, int max_iters = 200) {
    json cfg = {
        {"problem", {{"type", "bar1d"}, {"length", 1.0}, {"elements", 20}}},
        {"material", {{"type", "linear_graph"}, {"C", 2.0}}},
        {"boundary",
         {{"dirichlet",
           {{{"marker", 1}, {"component", 0}, {"value", 0.0}},
            {{"marker", 2}, {"component", 0}, {"value", 0.5}}}}}},
        {"solver", {{"max_iters", max_iters}}},
        {"output", out_dir},
    };
    return cfg.dump(1);
}

}  // namespace

TEST_CASE("solve: converged bar run writes the report and state tables") {
    const fs::path dir = fresh_dir("solve_bar");
    const fs::path out = dir / "out";
    write_text(dir / "bar.json", bar_config(out.string()));

    const RunResult r = run("solve --config " + (dir / "bar.json").string(), dir);
    CHECK(r.exit_code == 0);

    const json report = read_json(out / "report.json");
    CHECK(report["result"]["converged"] == true);
    CHECK(report["result"]["d2"].get<double>() < 1e-20);
    CHECK(report["config"]["problem"]["elements"] == 20);
    CHECK(report.contains("timing"));
    CHECK(report["residuals"]["compatibility"].get<double>() < 1e-10);
    CHECK(report["residuals"]["equilibrium"].get<double>() < 1e-10);

    CHECK(data_rows(out / "z.csv") == 20);
    CHECK(data_rows(out / "y.csv") == 20);

    // The --out flag redirects the artifacts.
    const fs::path moved = dir / "moved";
    const RunResult r2 =
        run("solve --config " + (dir / "bar.json").string() + " --out " + moved.string(), dir);
    CHECK(r2.exit_code == 0);
    CHECK(fs::exists(moved / "report.json"));
}

TEST_CASE("solve: iteration cap exits 2 but still writes artifacts") {
    const fs::path dir = fresh_dir("solve_cap");
    const fs::path out = dir / "out";
    json cfg = {
        {"problem", {{"type", "bar1d"}, {"length", 1.0}, {"elements", 8}}},
        {"material",
         {{"type", "two_well"}, {"C", 1.0}, {"a", {-1.0}}, {"b", {1.0}}, {"w", 0.0}}},
        {"boundary",
         {{"dirichlet",
           {{{"marker", 1}, {"component", 0}, {"value", 0.0}},
            {{"marker", 2}, {"component", 0}, {"value", 0.25}}}}}},
        {"solver", {{"max_iters", 1}, {"init", "zero"}}},
        {"output", out.string()},
    };
    write_text(dir / "cfg.json", cfg.dump(1));

    const RunResult r = run("solve --config " + (dir / "cfg.json").string(), dir);
    CHECK(r.exit_code == 2);
    const json report = read_json(out / "report.json");
    CHECK(report["result"]["converged"] == false);
    CHECK(fs::exists(out / "z.csv"));
    CHECK(fs::exists(out / "y.csv"));
}

TEST_CASE("input errors exit 1 and name the offending key") {
    const fs::path dir = fresh_dir("errors");

    write_text(dir / "bad_type.json", "{\"problem\": 3}");
    RunResult r = run("solve --config " + (dir / "bad_type.json").string(), dir);
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("problem") != std::string::npos);

    write_text(dir / "trunc.json", "{\"problem\": {");
    r = run("solve --config " + (dir / "trunc.json").string(), dir);
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("not valid JSON") != std::string::npos);

    json no_c = {
        {"problem", {{"type", "bar1d"}, {"length", 1.0}, {"elements", 8}}},
        {"material", {{"type", "linear_graph"}}},
        {"boundary", {{"dirichlet", {{{"marker", 1}, {"component", 0}, {"value", 0.0}}}}}},
    };
    write_text(dir / "no_c.json", no_c.dump(1));
    r = run("solve --config " + (dir / "no_c.json").string(), dir);
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("material.C") != std::string::npos);

    r = run("solve --config " + (dir / "does_not_exist.json").string(), dir);
    CHECK(r.exit_code == 1);
}

TEST_CASE("convergence: anchored study halves the error at each level") {
    const fs::path dir = fresh_dir("convergence");
    const fs::path out = dir / "out";

    // Anchor the sampling grid so the solution strain 0.5 sits a third of a
    // pitch from its nearest sample at every level of the schedule.
    const double lo = 0.5 - (31.0 / 3.0) * (0.2 / std::sqrt(2.0));
    json cfg = json::parse(bar_config(out.string()));
    cfg["sampling"] = {
        {"box", {{lo, 2.0}}},
        {"schedule",
         {{{"rho", 0.2}, {"t", 0.0}}, {{"rho", 0.1}, {"t", 0.0}}, {{"rho", 0.05}, {"t", 0.0}}}},
    };
    write_text(dir / "conv.json", cfg.dump(1));

    const RunResult r = run("convergence --config " + (dir / "conv.json").string(), dir);
    CHECK(r.exit_code == 0);

    const json report = read_json(out / "convergence.json");
    REQUIRE(report["rows"].size() == 3);
    std::vector<double> errors;
    for (const auto& row : report["rows"]) errors.push_back(row["error"].get<double>());
    CHECK(errors[0] > errors[1]);
    CHECK(errors[1] > errors[2]);
    CHECK(errors[0] / errors[1] == doctest::Approx(2.0).epsilon(0.05));
    CHECK(errors[1] / errors[2] == doctest::Approx(2.0).epsilon(0.05));
    CHECK(report["fitted_exponent"].get<double>() == doctest::Approx(1.0).epsilon(0.05));

    const std::string csv = read_text(out / "convergence.csv");
    CHECK(csv.rfind("rho,t,d2,error", 0) == 0);
    CHECK(data_rows(out / "convergence.csv") == 3);

    // A single-row schedule cannot be a study.
    cfg["sampling"]["schedule"] = {{{"rho", 0.2}, {"t", 0.0}}};
    write_text(dir / "single.json", cfg.dump(1));
    const RunResult bad = run("convergence --config " + (dir / "single.json").string(), dir);
    CHECK(bad.exit_code == 1);
    CHECK(bad.err.find("schedule") != std::string::npos);
}

TEST_CASE("relax analyze: pinned extremes and the boundary polyline") {
    const fs::path dir = fresh_dir("analyze");
    const fs::path out = dir / "out";
    json cfg = {
        {"wells", {{"C", 1.0}, {"b", {1.0, 2.0, 0.0}}}},
        {"output", out.string()},
    };
    write_text(dir / "rx.json", cfg.dump(1));

    const RunResult r = run("relax analyze --config " + (dir / "rx.json").string(), dir);
    CHECK(r.exit_code == 0);

    const json report = read_json(out / "analyze.json");
    CHECK(report["alpha_minus"].get<double>() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(report["alpha_plus"].get<double>() == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(report["cbb"].get<double>() == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(report["compatible"] == false);
    CHECK(report["dim"] == 2);

    // Band quadrilateral corners in (sigma : b, mu) coordinates.
    std::ifstream csv(out / "boundary.csv");
    REQUIRE(csv.good());
    std::string line;
    std::getline(csv, line);
    CHECK(line == "part,sigma_dot_b,mu");
    std::vector<std::string> band;
    while (std::getline(csv, line))
        if (line.rfind("band,", 0) == 0) band.push_back(line.substr(5));
    REQUIRE(band.size() == 5);  // closed polyline
    CHECK(band[0] == "-5,1");
    CHECK(band[1] == "3,1");
    CHECK(band[2] == "5,-1");
    CHECK(band[3] == "-3,-1");
    CHECK(band[4] == band[0]);
}

TEST_CASE("relax membership: classifications appended to the state table") {
    const fs::path dir = fresh_dir("membership");
    const fs::path out = dir / "out";
    write_text(dir / "states.csv",
               "eps_11,sig_11\n-3.0,-2.0\n0.0,0.0\n0.0,1.5\n0.0,1.0\n2.0,1.0\n");
    json cfg = {
        {"flag", {{"C", 1.0}, {"sigma0", 1.0}}},
        {"states_csv", "states.csv"},
        {"output", out.string()},
    };
    write_text(dir / "member.json", cfg.dump(1));

    const RunResult r = run("relax membership --config " + (dir / "member.json").string(), dir);
    CHECK(r.exit_code == 0);

    std::ifstream csv(out / "membership.csv");
    REQUIRE(csv.good());
    std::string line;
    std::getline(csv, line);
    CHECK(line == "eps_11,sig_11,region");
    std::vector<std::string> regions;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        regions.push_back(line.substr(line.rfind(',') + 1));
    }
    REQUIRE(regions.size() == 5);
    CHECK(regions[0] == "on_original_set");
    CHECK(regions[1] == "in_relaxed_set");
    CHECK(regions[2] == "outside");
    CHECK(regions[3] == "on_original_set");  // flag kink, closed convention
    CHECK(regions[4] == "on_original_set");  // branch point
}

TEST_CASE("relax envelope: pinned energy values and the witness flags") {
    const fs::path dir = fresh_dir("envelope");
    const fs::path out = dir / "out";
    json cfg = {{"C", 1.0}, {"sigma0", 1.0}, {"output", out.string()}};
    write_text(dir / "env.json", cfg.dump(1));

    const RunResult r = run("relax envelope --config " + (dir / "env.json").string(), dir);
    CHECK(r.exit_code == 0);

    const json report = read_json(out / "envelope.json");
    CHECK(report["energy_at_zero"].get<double>() == 0.0);
    CHECK(report["witness"]["in_flag_relaxation"] == true);
    CHECK(report["witness"]["on_envelope_graph"] == false);

    const std::string csv = read_text(out / "envelope.csv");
    CHECK(csv.rfind("eps,energy,stress", 0) == 0);
    CHECK(data_rows(out / "envelope.csv") == 201);
}

TEST_CASE("relax laminate: dyadic fraction is realized exactly on 64 elements") {
    const fs::path dir = fresh_dir("laminate");
    const fs::path out = dir / "out";
    json cfg = {
        {"wells", {{"C", 1.0}, {"b", {1.0}}}},
        {"z", {{"eps", {0.5}}, {"sig", {0.0}}}},
        {"h", {4, 8, 16}},
        {"elements", 64},
        {"output", out.string()},
    };
    write_text(dir / "lam.json", cfg.dump(1));

    const RunResult r = run("relax laminate --config " + (dir / "lam.json").string(), dir);
    CHECK(r.exit_code == 0);

    const json report = read_json(out / "laminate.json");
    CHECK(report["mu"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(report["lambda"].get<double>() == doctest::Approx(0.25).epsilon(1e-12));
    REQUIRE(report["fields"].size() == 3);
    for (const auto& field : report["fields"]) {
        CHECK(field["mean_error"].get<double>() < 1e-12);
        CHECK(fs::exists(out / field["csv"].get<std::string>()));
    }
    const std::string csv = read_text(out / "laminate_h4.csv");
    CHECK(csv.find("phase") != std::string::npos);
    CHECK(csv.find("minus") != std::string::npos);
    CHECK(csv.find("plus") != std::string::npos);
}

TEST_CASE("repeat runs are identical apart from the timing block") {
    const fs::path dir = fresh_dir("determinism");
    const fs::path out_a = dir / "a";
    const fs::path out_b = dir / "b";
    write_text(dir / "bar.json", bar_config(out_a.string()));

    CHECK(run("solve --config " + (dir / "bar.json").string(), dir).exit_code == 0);
    CHECK(run("solve --config " + (dir / "bar.json").string() + " --out " + out_b.string(), dir)
              .exit_code == 0);

    const json a = read_json(out_a / "report.json");
    const json b = read_json(out_b / "report.json");
    CHECK(without_timing(a) == without_timing(b));
    CHECK(read_text(out_a / "z.csv") == read_text(out_b / "z.csv"));
    CHECK(read_text(out_a / "y.csv") == read_text(out_b / "y.csv"));
}

TEST_CASE("selftest command runs the acceptance suite") {
    const fs::path dir = fresh_dir("selftest");
    const RunResult r = run("selftest", dir);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("PASS") != std::string::npos);
}
