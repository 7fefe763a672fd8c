#pragma once

#include <optional>
#include <vector>

#include "phasefid/bcs.hpp"
#include "phasefid/stoner.hpp"

// Grid sweeps over the (t, coupling) plane, critical-line detection from the
// order-parameter onset, fidelity-dip localization, and the susceptibility
// cross-check. Rows (Stoner) / columns (BCS) are independent units of work;
// result assembly is order-independent by cell index.

namespace phasefid::scan {

enum class Model { stoner, bcs };

struct SweepSpec {
    Model model = Model::stoner;
    double t_lo = 0.01, t_hi = 0.6;
    int t_count = 200;
    double c_lo = 0.6, c_hi = 1.6;
    int c_count = 200;
    double dt = 0.0;
    double dcoupling = 2e-3;
    double size = 750.0;          // Stoner size n or BCS mode density nu
    double crit_threshold = 1e-6; // order-parameter onset level
    int jobs = 1;
    int uhl_mode_count = 17;      // per-cell Uhlmann sample modes (BCS)
};

SweepSpec default_spec(Model m);

struct SweepCell {
    double t = 0.0;
    double coupling = 0.0;
    double order_param = 0.0;
    double mu = 0.0;  // Stoner only; nan for BCS (mu pinned to eps_F)
    double f = 1.0;
    double c = 1.0;
    double h = 1.0;
    double uhl_dev_max = 0.0;
    bool critical = false;   // cell brackets the order-parameter onset
    bool converged = false;
    double c_minus_f() const { return c - f; }
    double h_minus_f() const { return h - f; }
};

struct SweepGrid {
    SweepSpec spec;
    std::vector<SweepCell> cells;  // row-major, rows = t, cols = coupling

    double t_at(int i) const;
    double coupling_at(int j) const;
    const SweepCell& at(int i, int j) const { return cells[static_cast<size_t>(i * spec.c_count + j)]; }
    SweepCell& at(int i, int j) { return cells[static_cast<size_t>(i * spec.c_count + j)]; }
    int failed_cells() const;
};

// Every cell converged or flagged; per-cell failures are recorded, never
// interpolated. Deterministic for fixed spec regardless of jobs.
SweepGrid run_sweep(const SweepSpec& spec);

struct CriticalPoint {
    double t = 0.0;
    double coupling_c = 0.0;
};

// Per t-row onset coupling, bisection-refined to 1e-6 with fresh model
// solves; rows without an onset are omitted.
std::vector<CriticalPoint> detect_critical_line(const SweepGrid& grid);

struct DipPoint {
    double t = 0.0;
    double coupling = 0.0;
    bool has_dip = false;
};

// Per-row argmin of F over the coupling; rows with F flat at 1 within 1e-12
// are flagged "no dip".
std::vector<DipPoint> locate_fidelity_dip(const SweepGrid& grid);

struct SusceptibilityCheck {
    double lhs = 0.0;     // -2 ln C / (beta * dh_probe * dh_effective)
    double rhs = 0.0;     // chi(0) by finite differences of M
    double rel_err = 0.0;
};

// Probes the paramagnetic state at +-h_probe, evaluates C through the
// partition-ratio integral and chi(0) by finite differences; the effective
// field spacing absorbs the self-consistent Stoner enhancement so both
// sides estimate the same response function.
SusceptibilityCheck check_susceptibility_relation(const stoner::Params& p, double h_probe = 1e-4);

}  // namespace phasefid::scan
