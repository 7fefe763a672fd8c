#include "phasefid/csvio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace phasefid::io {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::runtime_error(what);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s) {
    if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    require(res.ec == std::errc(), "csv: bad number '" + s + "'");
    return v;
}

constexpr const char* kGridHeader =
    "model,t,coupling,order_param,mu,F,C,H,C_minus_F,H_minus_F,uhl_dev_max,critical,converged";

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string model_name(scan::Model m) { return m == scan::Model::stoner ? "stoner" : "bcs"; }

scan::Model parse_model(const std::string& name) {
    if (name == "stoner") return scan::Model::stoner;
    if (name == "bcs") return scan::Model::bcs;
    throw std::runtime_error("unknown model '" + name + "'");
}

void write_grid_csv(const std::string& path, const scan::SweepGrid& grid) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open " + path);
    out << kGridHeader << "\n";
    const std::string model = model_name(grid.spec.model);
    for (const auto& cell : grid.cells) {
        out << model << ',' << format_double(cell.t) << ',' << format_double(cell.coupling) << ','
            << format_double(cell.order_param) << ',' << format_double(cell.mu) << ','
            << format_double(cell.f) << ',' << format_double(cell.c) << ',' << format_double(cell.h)
            << ',' << format_double(cell.c_minus_f()) << ',' << format_double(cell.h_minus_f()) << ','
            << format_double(cell.uhl_dev_max) << ',' << (cell.critical ? 1 : 0) << ','
            << (cell.converged ? 1 : 0) << "\n";
    }
    require(out.good(), "write failed for " + path);
}

scan::SweepGrid read_grid_csv(const std::string& path, const scan::SweepSpec& spec) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "empty grid file " + path);
    require(line == kGridHeader, "unexpected grid header in " + path);
    scan::SweepGrid grid;
    grid.spec = spec;
    grid.cells.reserve(static_cast<size_t>(spec.t_count) * static_cast<size_t>(spec.c_count));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        require(f.size() == 13, "bad grid row in " + path);
        scan::SweepCell cell;
        cell.t = parse_double(f[1]);
        cell.coupling = parse_double(f[2]);
        cell.order_param = parse_double(f[3]);
        cell.mu = parse_double(f[4]);
        cell.f = parse_double(f[5]);
        cell.c = parse_double(f[6]);
        cell.h = parse_double(f[7]);
        cell.uhl_dev_max = parse_double(f[10]);
        cell.critical = f[11] == "1";
        cell.converged = f[12] == "1";
        grid.cells.push_back(cell);
    }
    require(grid.cells.size() ==
                static_cast<size_t>(spec.t_count) * static_cast<size_t>(spec.c_count),
            "grid size does not match spec in " + path);
    return grid;
}

void write_critical_csv(const std::string& path, const std::vector<scan::CriticalPoint>& line) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open " + path);
    out << "t,coupling_c\n";
    for (const auto& p : line)
        out << format_double(p.t) << ',' << format_double(p.coupling_c) << "\n";
    require(out.good(), "write failed for " + path);
}

void write_line_compare_csv(const std::string& path, const std::vector<LineCompareRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open " + path);
    out << "t,coupling_c,coupling_dipF,cells_apart\n";
    for (const auto& r : rows)
        out << format_double(r.t) << ',' << format_double(r.coupling_c) << ','
            << format_double(r.coupling_dip) << ',' << format_double(r.cells_apart) << "\n";
    require(out.good(), "write failed for " + path);
}

void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open " + path);
    out << "# resolved run configuration\n";
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
    require(out.good(), "write failed for " + path);
}

std::map<std::string, std::string> read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }
    return kv;
}

void write_plot_script(const std::string& path, const std::string& grid_csv,
                       const std::string& line_csv, const scan::SweepSpec& spec) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open " + path);
    out << "# gnuplot script: fidelity heatmap with the critical line overlay\n"
        << "set datafile separator ','\n"
        << "set terminal pngcairo size 1000,800\n"
        << "set output 'fidelity_map.png'\n"
        << "set xlabel 'coupling'\n"
        << "set ylabel 't'\n"
        << "set cblabel 'F'\n"
        << "set xrange [" << format_double(spec.c_lo) << ':' << format_double(spec.c_hi) << "]\n"
        << "set yrange [" << format_double(spec.t_lo) << ':' << format_double(spec.t_hi) << "]\n"
        << "set view map\n"
        << "splot '" << grid_csv << "' every ::1 using 3:2:6 with points pt 5 ps 0.6 palette "
           "notitle, \\\n"
        << "      '" << line_csv << "' every ::1 using 2:1:(1.0) with points pt 7 ps 0.4 lc rgb "
           "'black' title 'critical line'\n";
    require(out.good(), "write failed for " + path);
}

}  // namespace phasefid::io
