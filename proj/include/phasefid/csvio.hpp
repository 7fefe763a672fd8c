#pragma once

#include <map>
#include <string>
#include <vector>

#include "phasefid/scanner.hpp"

// Flat-file output: locale-independent CSV ('.' decimal separator, ','
// fields, LF line endings, 17 significant digits) plus the key = value
// manifest that makes reruns byte-identical.

namespace phasefid::io {

std::string format_double(double x);

std::string model_name(scan::Model m);
scan::Model parse_model(const std::string& name);

void write_grid_csv(const std::string& path, const scan::SweepGrid& grid);
scan::SweepGrid read_grid_csv(const std::string& path, const scan::SweepSpec& spec);

void write_critical_csv(const std::string& path, const std::vector<scan::CriticalPoint>& line);

struct LineCompareRow {
    double t = 0.0;
    double coupling_c = 0.0;
    double coupling_dip = 0.0;
    double cells_apart = 0.0;
};
void write_line_compare_csv(const std::string& path, const std::vector<LineCompareRow>& rows);

// key = value manifest; keys are valid --config keys so a manifest can be
// replayed directly.
void write_manifest(const std::string& path, const std::vector<std::pair<std::string, std::string>>& kv);
std::map<std::string, std::string> read_manifest(const std::string& path);

// Heatmap of F over the plane with the critical line overlaid; plotting is
// optional output, never a computation dependency.
void write_plot_script(const std::string& path, const std::string& grid_csv,
                       const std::string& line_csv, const scan::SweepSpec& spec);

}  // namespace phasefid::io
