#include <CLI11.hpp>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "phasefid/csvio.hpp"
#include "phasefid/oracle.hpp"
#include "phasefid/scanner.hpp"

namespace fs = std::filesystem;
using namespace phasefid;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kFailureRateLimit = 1e-3;

struct RangeSpec {
    double lo = 0.0;
    double hi = 1.0;
    int n = 2;
};

RangeSpec parse_range(const std::string& s) {
    RangeSpec r;
    const auto c1 = s.find(':');
    const auto c2 = s.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw CLI::ValidationError("range", "expected lo:hi:n, got '" + s + "'");
    try {
        r.lo = std::stod(s.substr(0, c1));
        r.hi = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
        r.n = std::stoi(s.substr(c2 + 1));
    } catch (const std::exception&) {
        throw CLI::ValidationError("range", "expected lo:hi:n, got '" + s + "'");
    }
    return r;
}

std::string range_string(double lo, double hi, int n) {
    return io::format_double(lo) + ":" + io::format_double(hi) + ":" + std::to_string(n);
}

// Common sweep flags: defaults <- config file <- explicit flags.
struct SweepCli {
    std::string model = "stoner";
    std::string t_range;
    std::string c_range;
    double dt = 0.0;
    double dcoupling = 0.0;
    double size = 0.0;
    int jobs = 1;
    std::string out = ".";
    std::string config;
    CLI::Option* model_opt = nullptr;
    CLI::Option* t_opt = nullptr;
    CLI::Option* c_opt = nullptr;
    CLI::Option* dt_opt = nullptr;
    CLI::Option* du_opt = nullptr;
    CLI::Option* dv_opt = nullptr;
    CLI::Option* size_opt = nullptr;
    CLI::Option* nu_opt = nullptr;
    CLI::Option* jobs_opt = nullptr;

    void attach(CLI::App* cmd) {
        model_opt = cmd->add_option("--model", model, "model: stoner | bcs");
        t_opt = cmd->add_option("--t", t_range, "temperature range lo:hi:n");
        c_opt = cmd->add_option("--coupling", c_range, "coupling range lo:hi:n");
        dt_opt = cmd->add_option("--dt", dt, "temperature offset to the neighbor point");
        du_opt = cmd->add_option("--du", dcoupling, "coupling offset (stoner)");
        dv_opt = cmd->add_option("--dv", dcoupling, "coupling offset (bcs)");
        size_opt = cmd->add_option("--size", size, "stoner system size n = (3/4) N");
        nu_opt = cmd->add_option("--nu", size, "bcs mode density nu");
        jobs_opt = cmd->add_option("--jobs", jobs, "parallel row/column workers");
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--config", config, "flat key = value config file; flags override");
    }

    scan::SweepSpec resolve() const {
        std::map<std::string, std::string> file;
        if (!config.empty()) file = io::read_manifest(config);
        auto from_file = [&](const char* key) -> std::optional<std::string> {
            const auto it = file.find(key);
            if (it == file.end()) return std::nullopt;
            return it->second;
        };
        scan::Model m = scan::Model::stoner;
        if (model_opt->count() > 0)
            m = io::parse_model(model);
        else if (const auto v = from_file("model"))
            m = io::parse_model(*v);
        scan::SweepSpec sp = scan::default_spec(m);
        auto apply_range = [&](const CLI::Option* opt, const std::string& flag_value, const char* key,
                               double& lo, double& hi, int& n) {
            std::optional<std::string> v;
            if (opt->count() > 0)
                v = flag_value;
            else
                v = from_file(key);
            if (!v) return;
            const RangeSpec r = parse_range(*v);
            lo = r.lo;
            hi = r.hi;
            n = r.n;
        };
        apply_range(t_opt, t_range, "t", sp.t_lo, sp.t_hi, sp.t_count);
        apply_range(c_opt, c_range, "coupling", sp.c_lo, sp.c_hi, sp.c_count);
        auto apply_double = [&](const CLI::Option* a, const CLI::Option* b, double flag_value,
                                const char* key, double& target) {
            if ((a && a->count() > 0) || (b && b->count() > 0)) {
                target = flag_value;
                return;
            }
            if (const auto v = from_file(key)) target = std::stod(*v);
        };
        apply_double(dt_opt, nullptr, dt, "dt", sp.dt);
        apply_double(du_opt, dv_opt, dcoupling, "dcoupling", sp.dcoupling);
        apply_double(size_opt, nu_opt, size, "size", sp.size);
        if (jobs_opt->count() > 0)
            sp.jobs = jobs;
        else if (const auto v = from_file("jobs"))
            sp.jobs = std::stoi(*v);
        if (sp.jobs < 1) sp.jobs = 1;
        return sp;
    }
};

std::vector<std::pair<std::string, std::string>> manifest_entries(const scan::SweepSpec& sp) {
    return {
        {"version", kVersion},
        {"model", io::model_name(sp.model)},
        {"t", range_string(sp.t_lo, sp.t_hi, sp.t_count)},
        {"coupling", range_string(sp.c_lo, sp.c_hi, sp.c_count)},
        {"dt", io::format_double(sp.dt)},
        {"dcoupling", io::format_double(sp.dcoupling)},
        {"size", io::format_double(sp.size)},
        {"crit_threshold", io::format_double(sp.crit_threshold)},
        {"uhl_mode_count", std::to_string(sp.uhl_mode_count)},
        {"jobs", std::to_string(sp.jobs)},
    };
}

scan::SweepSpec spec_from_manifest(const std::string& path) {
    const auto kv = io::read_manifest(path);
    auto need = [&](const char* key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw std::runtime_error(std::string("manifest misses key ") + key);
        return it->second;
    };
    scan::SweepSpec sp = scan::default_spec(io::parse_model(need("model")));
    const RangeSpec tr = parse_range(need("t"));
    sp.t_lo = tr.lo;
    sp.t_hi = tr.hi;
    sp.t_count = tr.n;
    const RangeSpec cr = parse_range(need("coupling"));
    sp.c_lo = cr.lo;
    sp.c_hi = cr.hi;
    sp.c_count = cr.n;
    sp.dt = std::stod(need("dt"));
    sp.dcoupling = std::stod(need("dcoupling"));
    sp.size = std::stod(need("size"));
    return sp;
}

std::vector<io::LineCompareRow> compare_lines(const scan::SweepGrid& grid) {
    const auto line = scan::detect_critical_line(grid);
    const auto dips = scan::locate_fidelity_dip(grid);
    const double cell_width = (grid.spec.c_hi - grid.spec.c_lo) / (grid.spec.c_count - 1);
    std::vector<io::LineCompareRow> rows;
    for (const auto& cp : line) {
        const scan::DipPoint* match = nullptr;
        for (const auto& d : dips)
            if (d.has_dip && std::abs(d.t - cp.t) < 1e-12) match = &d;
        if (!match) continue;
        io::LineCompareRow r;
        r.t = cp.t;
        r.coupling_c = cp.coupling_c;
        r.coupling_dip = match->coupling;
        r.cells_apart = std::abs(match->coupling - cp.coupling_c) / cell_width;
        rows.push_back(r);
    }
    return rows;
}

int cmd_scan(const SweepCli& cli) {
    const scan::SweepSpec sp = cli.resolve();
    const scan::SweepGrid grid = scan::run_sweep(sp);
    fs::create_directories(cli.out);
    const fs::path out(cli.out);
    io::write_grid_csv((out / "grid.csv").string(), grid);
    io::write_critical_csv((out / "critical_line.csv").string(), scan::detect_critical_line(grid));
    io::write_plot_script((out / "plot.gp").string(), "grid.csv", "critical_line.csv", sp);
    io::write_manifest((out / "manifest").string(), manifest_entries(sp));
    const double rate =
        static_cast<double>(grid.failed_cells()) / static_cast<double>(grid.cells.size());
    if (rate > kFailureRateLimit) {
        std::cerr << "scan: cell failure rate " << rate << " exceeds " << kFailureRateLimit << "\n";
        return 2;
    }
    return 0;
}

int cmd_critical(const SweepCli& cli, const std::string& grid_path) {
    scan::SweepGrid grid;
    if (!grid_path.empty()) {
        const fs::path manifest = fs::path(grid_path).parent_path() / "manifest";
        grid = io::read_grid_csv(grid_path, spec_from_manifest(manifest.string()));
    } else {
        grid = scan::run_sweep(cli.resolve());
    }
    fs::create_directories(cli.out);
    io::write_line_compare_csv((fs::path(cli.out) / "line_compare.csv").string(), compare_lines(grid));
    return 0;
}

int cmd_oracle(std::uint64_t seed, int draws, bool corrupt) {
    const auto results = oracle::run_all(
        seed, draws, corrupt ? oracle::Corruption::trace_formula : oracle::Corruption::none);
    bool ok = true;
    std::printf("seed = %llu, draws = %d\n", static_cast<unsigned long long>(seed), draws);
    for (const auto& r : results) {
        std::printf("%-40s max |dev| = %.3e (%d draws)\n", r.name.c_str(), r.max_deviation, r.draws);
        ok = ok && r.max_deviation <= 1e-10;
    }
    std::printf("oracle: %s\n", ok ? "PASS" : "FAIL");
    return ok ? 0 : 2;
}

int cmd_gap(double v, double t) {
    const bcs::GapState s = bcs::solve_gap(v, t);
    std::printf("gap = %s\n", io::format_double(s.gap).c_str());
    std::printf("residual = %s\n",
                io::format_double(s.gap > 0.0 ? bcs::gap_residual(v, t, s.gap) : 0.0).c_str());
    std::printf("t_c = %s\n", io::format_double(bcs::critical_temperature(v)).c_str());
    return 0;
}

int cmd_equilibrium(double u, double t) {
    const stoner::State s = stoner::solve_equilibrium({t, u, 0.0});
    std::printf("m = %s\n", io::format_double(s.m).c_str());
    std::printf("mu = %s\n", io::format_double(s.mu).c_str());
    std::printf("branch = %s\n", s.branch == stoner::Branch::magnetic ? "magnetic" : "paramagnetic");
    return 0;
}

int cmd_uhlmann(const SweepCli& cli, int eps_count) {
    const scan::SweepSpec sp = cli.resolve();
    if (sp.model != scan::Model::bcs)
        throw CLI::ValidationError("--model", "uhlmann profiles are defined for the bcs model");
    bcs::Params p{sp.c_lo, sp.t_lo, sp.size, sp.dt, sp.dcoupling};
    std::vector<double> eps;
    for (int i = 0; i < eps_count; ++i)
        eps.push_back(-1.0 + 2.0 * static_cast<double>(i) / (eps_count - 1));
    const auto profile = bcs::uhlmann_profile(p, eps);
    fs::create_directories(cli.out);
    const fs::path path = fs::path(cli.out) / "uhlmann.csv";
    std::ofstream outf(path, std::ios::binary);
    outf << "eps,uhl_dev,identity_residual,degenerate\n";
    double max_dev = 0.0, max_res = 0.0;
    for (const auto& s : profile) {
        outf << io::format_double(s.eps) << ',' << io::format_double(s.uhl_dev) << ','
             << io::format_double(s.identity_residual) << ',' << (s.degenerate ? 1 : 0) << "\n";
        max_dev = std::max(max_dev, s.uhl_dev);
        max_res = std::max(max_res, s.identity_residual);
    }
    std::printf("max uhl_dev = %s\n", io::format_double(max_dev).c_str());
    std::printf("max identity_residual = %s\n", io::format_double(max_res).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixed-state fidelity maps for Stoner-Hubbard and BCS mean-field transitions"};
    app.set_version_flag("--version", std::string("phasefid ") + kVersion);
    app.require_subcommand(1);

    auto* scan_cmd = app.add_subcommand("scan", "sweep the (t, coupling) plane and write CSV + plot");
    SweepCli scan_cli;
    scan_cli.attach(scan_cmd);

    auto* crit_cmd = app.add_subcommand("critical", "critical line vs fidelity dip comparison");
    SweepCli crit_cli;
    crit_cli.attach(crit_cmd);
    std::string grid_path;
    crit_cmd->add_option("--grid", grid_path, "existing grid.csv (manifest expected alongside)");

    auto* oracle_cmd = app.add_subcommand("oracle", "dense-matrix equivalence suites");
    std::uint64_t seed = 20240817;
    int draws = 1000;
    bool corrupt = false;
    oracle_cmd->add_option("--seed", seed, "random seed");
    oracle_cmd->add_option("--draws", draws, "draws per suite");
    oracle_cmd->add_flag("--corrupt", corrupt, "negative control: corrupt a formula")->group("");

    auto* gap_cmd = app.add_subcommand("gap", "single-point BCS gap");
    double gap_v = 0.3, gap_t = 0.02;
    gap_cmd->add_option("--coupling", gap_v, "coupling v = D_F V")->required();
    gap_cmd->add_option("--t", gap_t, "temperature")->required();

    auto* eq_cmd = app.add_subcommand("equilibrium", "single-point Stoner solve");
    double eq_u = 1.0, eq_t = 0.05;
    eq_cmd->add_option("--coupling", eq_u, "coupling u = D_F U")->required();
    eq_cmd->add_option("--t", eq_t, "temperature")->required();

    auto* uhl_cmd = app.add_subcommand("uhlmann", "per-mode Uhlmann profile dump");
    SweepCli uhl_cli;
    uhl_cli.attach(uhl_cmd);
    int eps_count = 41;
    uhl_cmd->add_option("--eps-count", eps_count, "mode energies across the window");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    try {
        if (scan_cmd->parsed()) return cmd_scan(scan_cli);
        if (crit_cmd->parsed()) return cmd_critical(crit_cli, grid_path);
        if (oracle_cmd->parsed()) return cmd_oracle(seed, draws, corrupt);
        if (gap_cmd->parsed()) return cmd_gap(gap_v, gap_t);
        if (eq_cmd->parsed()) return cmd_equilibrium(eq_u, eq_t);
        if (uhl_cmd->parsed()) return cmd_uhlmann(uhl_cli, eps_count);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
