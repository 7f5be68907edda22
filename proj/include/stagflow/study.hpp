#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "stagflow/config.hpp"

namespace stagflow {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3, exit_io = 4 };

/// Grid described by the [grid] and [bc] sections.
template <typename T>
Grid<T> grid_from_config(const RunConfig& cfg);

struct AdjointCheckRow {
    std::string op;
    double max_rel_error = 0;  // worst trial
    bool pass = false;
};

struct AdjointCheckOptions {
    int trials = 50;
    double eps = 1e-6;
    double tol = 1e-5;
    std::uint64_t seed = 42;
    PoissonKind solver = PoissonKind::direct;
    RkMethod method = RkMethod::ssp33;
    double nu = 0.01;
    double dt = 0.01;
};

/// Finite-difference checks of every pullback on a periodic grid:
/// <w, (F(u + eps v) - F(u - eps v)) / 2eps> against <pullback(w), v>.
std::vector<AdjointCheckRow> adjoint_check(const Grid<double>& g, const AdjointCheckOptions& opts);

/// Runs the configured study, writing effective_config.ini, results.csv and
/// log.txt (plus study-specific files) under cfg.output. Progress lines also
/// go to echo when given. Returns an ExitCode.
int run_study(const RunConfig& cfg, std::ostream* echo = nullptr);

}  // namespace stagflow
