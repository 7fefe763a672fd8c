#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "phasefid/csvio.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string stdout_text;
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt";
    const std::string cmd = std::string(PHASEFID_CLI_PATH) + " " + args + " > " + out.string() +
                            " 2> " + (dir / "stderr.txt").string();
    const int rc = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WEXITSTATUS(rc);
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    r.stdout_text = ss.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "phasefid_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("scan: outputs, manifest replay, byte-identical reruns") {
    const fs::path dir = fresh_dir("scan");
    const std::string flags =
        "scan --model stoner --t 0.05:0.1:3 --coupling 0.95:1.1:12 --du 2e-3 --jobs 2 --out ";
    const auto r1 = run_cli(flags + (dir / "a").string(), dir);
    CHECK(r1.exit_code == 0);
    for (const char* f : {"grid.csv", "critical_line.csv", "plot.gp", "manifest"})
        CHECK(fs::exists(dir / "a" / f));
    // header contract
    {
        std::ifstream in(dir / "a" / "grid.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header ==
              "model,t,coupling,order_param,mu,F,C,H,C_minus_F,H_minus_F,uhl_dev_max,critical,"
              "converged");
    }
    // rerun into a second directory: byte-identical CSV
    const auto r2 = run_cli(flags + (dir / "b").string(), dir);
    CHECK(r2.exit_code == 0);
    CHECK(slurp(dir / "a" / "grid.csv") == slurp(dir / "b" / "grid.csv"));
    CHECK(slurp(dir / "a" / "critical_line.csv") == slurp(dir / "b" / "critical_line.csv"));
    // replaying the manifest reproduces the run byte-identically
    const auto r3 = run_cli("scan --config " + (dir / "a" / "manifest").string() + " --out " +
                                (dir / "c").string(),
                            dir);
    CHECK(r3.exit_code == 0);
    CHECK(slurp(dir / "a" / "grid.csv") == slurp(dir / "c" / "grid.csv"));
    CHECK(slurp(dir / "a" / "manifest") == slurp(dir / "c" / "manifest"));
}

TEST_CASE("usage errors exit 1") {
    const fs::path dir = fresh_dir("usage");
    CHECK(run_cli("scan --t nonsense:1:2", dir).exit_code == 1);
    CHECK(run_cli("scan --model haldane --out " + dir.string(), dir).exit_code == 1);
    CHECK(run_cli("definitely-not-a-subcommand", dir).exit_code == 1);
    CHECK(run_cli("gap --t 0.02", dir).exit_code == 1);  // missing required flag
}

TEST_CASE("critical: from flags and from an existing grid; empty grid exits 1") {
    const fs::path dir = fresh_dir("critical");
    const auto scan = run_cli(
        "scan --model stoner --t 0.05:0.1:3 --coupling 0.95:1.1:12 --du 2e-3 --jobs 2 --out " +
            (dir / "a").string(),
        dir);
    REQUIRE(scan.exit_code == 0);
    const auto crit = run_cli("critical --grid " + (dir / "a" / "grid.csv").string() + " --out " +
                                  (dir / "a").string(),
                              dir);
    CHECK(crit.exit_code == 0);
    REQUIRE(fs::exists(dir / "a" / "line_compare.csv"));
    {
        std::ifstream in(dir / "a" / "line_compare.csv");
        std::string header, row;
        std::getline(in, header);
        CHECK(header == "t,coupling_c,coupling_dipF,cells_apart");
        int rows = 0;
        while (std::getline(in, row))
            if (!row.empty()) ++rows;
        CHECK(rows == 3);  // all three t-rows cross the line in this window
    }
    // empty grid file
    std::ofstream(dir / "empty.csv").close();
    CHECK(run_cli("critical --grid " + (dir / "empty.csv").string() + " --out " + dir.string(),
                  dir)
              .exit_code == 1);
}

TEST_CASE("oracle: pass at defaults, fail under the corrupted-formula fixture") {
    const fs::path dir = fresh_dir("oracle");
    const auto ok = run_cli("oracle --draws 200 --seed 7", dir);
    CHECK(ok.exit_code == 0);
    CHECK(ok.stdout_text.find("PASS") != std::string::npos);
    const auto bad = run_cli("oracle --draws 50 --seed 7 --corrupt", dir);
    CHECK(bad.exit_code != 0);
    CHECK(bad.stdout_text.find("FAIL") != std::string::npos);
}

TEST_CASE("gap and equilibrium single-point commands") {
    const fs::path dir = fresh_dir("point");
    const auto gap = run_cli("gap --coupling 0.3 --t 0.0", dir);
    CHECK(gap.exit_code == 0);
    // delta(0, 0.3) = 1/sinh(1/0.3)
    CHECK(gap.stdout_text.find("gap = 0.0714389") != std::string::npos);
    CHECK(gap.stdout_text.find("t_c = 0.040449") != std::string::npos);
    const auto eq = run_cli("equilibrium --coupling 1.05 --t 0.001", dir);
    CHECK(eq.exit_code == 0);
    CHECK(eq.stdout_text.find("branch = magnetic") != std::string::npos);
    CHECK(eq.stdout_text.find("m = 0.3612") != std::string::npos);
}

TEST_CASE("uhlmann profile dump") {
    const fs::path dir = fresh_dir("uhlmann");
    const auto r = run_cli(
        "uhlmann --model bcs --t 0.0406:0.05:2 --coupling 0.3:0.4:2 --dv 1e-3 --eps-count 21 "
        "--out " +
            dir.string(),
        dir);
    CHECK(r.exit_code == 0);
    REQUIRE(fs::exists(dir / "uhlmann.csv"));
    std::ifstream in(dir / "uhlmann.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "eps,uhl_dev,identity_residual,degenerate");
    int rows = 0;
    std::string row;
    while (std::getline(in, row))
        if (!row.empty()) ++rows;
    CHECK(rows == 21);
}
