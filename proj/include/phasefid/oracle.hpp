#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Seeded random-draw equivalence suites: every closed form is replayed
// against the dense 4x4 route and the largest absolute deviation reported.

namespace phasefid::oracle {

struct SuiteResult {
    std::string name;
    double max_deviation = 0.0;
    int draws = 0;
};

// Corruption hooks for the negative-control run: a deliberately wrong
// formula must drive the suites red.
enum class Corruption { none, trace_formula };

SuiteResult run_algebra_suite(std::uint64_t seed, int draws, Corruption corrupt = Corruption::none);
SuiteResult run_stoner_suite(std::uint64_t seed, int draws, Corruption corrupt = Corruption::none);
SuiteResult run_bcs_suite(std::uint64_t seed, int draws, Corruption corrupt = Corruption::none);

std::vector<SuiteResult> run_all(std::uint64_t seed, int draws, Corruption corrupt = Corruption::none);

}  // namespace phasefid::oracle
