#include "phasefid/scanner.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace phasefid::scan {

namespace {

double grid_value(double lo, double hi, int count, int idx) {
    if (count <= 1) return lo;
    return lo + (hi - lo) * static_cast<double>(idx) / static_cast<double>(count - 1);
}

std::vector<double> uhl_eps_set(int count) {
    // 0 plus symmetric log-spaced energies covering the window.
    std::vector<double> eps{0.0};
    const int per_side = std::max(1, (count - 1) / 2);
    for (int i = 0; i < per_side; ++i) {
        const double x = std::pow(10.0, -3.0 + 3.0 * static_cast<double>(i) / std::max(1, per_side - 1));
        eps.push_back(x);
        eps.push_back(-x);
    }
    return eps;
}

void fill_stoner_row(SweepGrid& grid, int row) {
    const SweepSpec& sp = grid.spec;
    const double t = grid.t_at(row);
    std::optional<stoner::State> seed_a, seed_b;
    for (int j = 0; j < sp.c_count; ++j) {
        const double u = grid.coupling_at(j);
        SweepCell& cell = grid.at(row, j);
        cell.t = t;
        cell.coupling = u;
        try {
            const stoner::State a = stoner::solve_equilibrium({t, u, 0.0}, seed_a);
            const stoner::State b =
                stoner::solve_equilibrium({t + sp.dt, u + sp.dcoupling, 0.0},
                                          seed_b ? seed_b : std::optional<stoner::State>(a));
            seed_a = a;
            seed_b = b;
            cell.order_param = a.m;
            cell.mu = a.mu;
            const double lf = stoner::log_total_fidelity(a, b, sp.size);
            cell.f = std::exp(lf);
            cell.c = std::exp(lf + stoner::log_route_difference(a, b, sp.size));
            cell.h = cell.c;  // commuting model: H = Tr[sqrt(rho_a) sqrt(rho_b)] = C
            cell.uhl_dev_max = 0.0;
            cell.converged = true;
        } catch (const std::exception&) {
            cell.order_param = std::numeric_limits<double>::quiet_NaN();
            cell.mu = std::numeric_limits<double>::quiet_NaN();
            cell.f = cell.c = cell.h = std::numeric_limits<double>::quiet_NaN();
            cell.converged = false;
        }
    }
}

void fill_bcs_column(SweepGrid& grid, int col) {
    const SweepSpec& sp = grid.spec;
    const double v = grid.coupling_at(col);
    const std::vector<double> eps_set = uhl_eps_set(sp.uhl_mode_count);
    for (int i = 0; i < sp.t_count; ++i) {
        const double t = grid.t_at(i);
        SweepCell& cell = grid.at(i, col);
        cell.t = t;
        cell.coupling = v;
        cell.mu = std::numeric_limits<double>::quiet_NaN();
        try {
            bcs::Params p{v, t, sp.size, sp.dt, sp.dcoupling};
            const bcs::FidelityResult r = bcs::total_fidelity(p);
            cell.order_param = r.state_a.gap;
            cell.f = r.f;
            cell.c = r.c;
            cell.h = r.h;
            double dev = 0.0;
            const bcs::ModePoint ma{1.0 / t, 0.0, cplx(r.state_a.gap, 0.0)};
            const bcs::ModePoint mb{1.0 / (t + sp.dt), 0.0, cplx(r.state_b.gap, 0.0)};
            for (double eps : eps_set) {
                bcs::ModePoint xa = ma, xb = mb;
                xa.eps = eps;
                xb.eps = eps;
                dev = std::max(dev, bcs::mode_uhl_dev(xa, xb));
            }
            cell.uhl_dev_max = dev;
            cell.converged = true;
        } catch (const std::exception&) {
            cell.order_param = std::numeric_limits<double>::quiet_NaN();
            cell.f = cell.c = cell.h = std::numeric_limits<double>::quiet_NaN();
            cell.converged = false;
        }
    }
}

void mark_critical_cells(SweepGrid& grid) {
    for (int i = 0; i < grid.spec.t_count; ++i)
        for (int j = 0; j + 1 < grid.spec.c_count; ++j) {
            const SweepCell& lo = grid.at(i, j);
            const SweepCell& hi = grid.at(i, j + 1);
            if (!lo.converged || !hi.converged) continue;
            if (lo.order_param <= grid.spec.crit_threshold &&
                hi.order_param > grid.spec.crit_threshold)
                grid.at(i, j).critical = true;
        }
}

void run_parallel(int units, int jobs, const std::function<void(int)>& work) {
    if (jobs <= 1) {
        for (int i = 0; i < units; ++i) work(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int n_threads = std::min(jobs, units);
    pool.reserve(static_cast<size_t>(n_threads));
    for (int k = 0; k < n_threads; ++k)
        pool.emplace_back([&] {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= units) return;
                work(i);
            }
        });
    for (auto& th : pool) th.join();
}

}  // namespace

SweepSpec default_spec(Model m) {
    SweepSpec sp;
    sp.model = m;
    if (m == Model::stoner) {
        sp.t_lo = 0.01;
        sp.t_hi = 0.6;
        sp.c_lo = 0.6;
        sp.c_hi = 1.6;
        sp.dcoupling = 2e-3;
        sp.size = 750.0;
    } else {
        sp.t_lo = 0.005;
        sp.t_hi = 0.12;
        sp.c_lo = 0.05;
        sp.c_hi = 0.5;
        sp.dcoupling = 1e-3;
        sp.size = 2.0;
    }
    return sp;
}

double SweepGrid::t_at(int i) const { return grid_value(spec.t_lo, spec.t_hi, spec.t_count, i); }
double SweepGrid::coupling_at(int j) const {
    return grid_value(spec.c_lo, spec.c_hi, spec.c_count, j);
}

int SweepGrid::failed_cells() const {
    int n = 0;
    for (const auto& c : cells)
        if (!c.converged) ++n;
    return n;
}

SweepGrid run_sweep(const SweepSpec& spec) {
    if (spec.t_count < 2 || spec.c_count < 2)
        throw std::invalid_argument("run_sweep: grid counts must be >= 2");
    if (spec.t_lo <= 0.0 || spec.t_hi <= spec.t_lo || spec.c_hi <= spec.c_lo)
        throw std::invalid_argument("run_sweep: invalid ranges");
    if (spec.dt == 0.0 && spec.dcoupling == 0.0)
        throw std::invalid_argument("run_sweep: offsets must be nonzero in at least one direction");
    SweepGrid grid;
    grid.spec = spec;
    grid.cells.assign(static_cast<size_t>(spec.t_count) * static_cast<size_t>(spec.c_count), SweepCell{});
    if (spec.model == Model::stoner)
        run_parallel(spec.t_count, spec.jobs, [&](int row) { fill_stoner_row(grid, row); });
    else
        run_parallel(spec.c_count, spec.jobs, [&](int col) { fill_bcs_column(grid, col); });
    mark_critical_cells(grid);
    return grid;
}

std::vector<CriticalPoint> detect_critical_line(const SweepGrid& grid) {
    const SweepSpec& sp = grid.spec;
    std::vector<CriticalPoint> line;
    for (int i = 0; i < sp.t_count; ++i) {
        const double t = grid.t_at(i);
        std::optional<std::pair<double, double>> bracket;
        for (int j = 0; j + 1 < sp.c_count; ++j) {
            const SweepCell& lo = grid.at(i, j);
            const SweepCell& hi = grid.at(i, j + 1);
            if (!lo.converged || !hi.converged) continue;
            if (lo.order_param <= sp.crit_threshold && hi.order_param > sp.crit_threshold) {
                bracket = {grid.coupling_at(j), grid.coupling_at(j + 1)};
                break;
            }
        }
        if (!bracket) continue;  // row does not contain the onset
        auto above = [&](double coupling) {
            if (sp.model == Model::stoner)
                return stoner::solve_equilibrium({t, coupling, 0.0}).m > sp.crit_threshold;
            return bcs::solve_gap(coupling, t).gap > sp.crit_threshold;
        };
        double lo = bracket->first, hi = bracket->second;
        while (hi - lo > 1e-6) {
            const double mid = 0.5 * (lo + hi);
            (above(mid) ? hi : lo) = mid;
        }
        line.push_back({t, 0.5 * (lo + hi)});
    }
    return line;
}

std::vector<DipPoint> locate_fidelity_dip(const SweepGrid& grid) {
    std::vector<DipPoint> dips;
    for (int i = 0; i < grid.spec.t_count; ++i) {
        DipPoint d;
        d.t = grid.t_at(i);
        double fmin = std::numeric_limits<double>::infinity();
        int arg = -1;
        for (int j = 0; j < grid.spec.c_count; ++j) {
            const SweepCell& cell = grid.at(i, j);
            if (!cell.converged) continue;
            if (cell.f < fmin) {
                fmin = cell.f;
                arg = j;
            }
        }
        if (arg >= 0 && fmin < 1.0 - 1e-12) {
            d.coupling = grid.coupling_at(arg);
            d.has_dip = true;
        }
        dips.push_back(d);
    }
    return dips;
}

SusceptibilityCheck check_susceptibility_relation(const stoner::Params& p, double h_probe) {
    if (h_probe <= 0.0) throw stoner::DomainError("check_susceptibility_relation: h_probe must be > 0");
    const stoner::State base = stoner::solve_equilibrium({p.t, p.u, 0.0});
    if (base.branch != stoner::Branch::paramagnetic)
        throw stoner::DomainError("check_susceptibility_relation: point is not paramagnetic");
    const stoner::State plus = stoner::solve_equilibrium({p.t, p.u, h_probe}, base);
    const stoner::State minus = stoner::solve_equilibrium({p.t, p.u, -h_probe}, base);
    SusceptibilityCheck r;
    const double n_electrons = (4.0 / 3.0) * p.size;
    const double dm = 0.5 * (plus.m - minus.m);
    r.rhs = n_electrons * dm / h_probe;
    // Half-difference of the total symmetry-breaking field, probe plus the
    // self-consistent molecular part (8/3) u m.
    const double h_eff = (8.0 / 3.0) * p.u * dm + h_probe;
    const double ln_c = stoner::log_total_partition_ratio(plus, minus, p.size);
    r.lhs = -2.0 * p.t * ln_c / (h_probe * h_eff);
    r.rel_err = std::abs(r.lhs - r.rhs) / std::max(std::abs(r.rhs), 1e-300);
    return r;
}

}  // namespace phasefid::scan
