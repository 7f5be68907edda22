#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "stagflow/cases.hpp"

namespace stagflow {

/// Bad configuration; line is 0 for command-line overrides and cross-field
/// checks on defaulted keys.
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& what, std::string key, int line)
        : std::runtime_error(what), key(std::move(key)), line(line) {}
    std::string key;
    int line;
};

enum class StudyKind { simulate, convergence, vcurve, adjoint_check, channel_smoke };
StudyKind parse_study_kind(const std::string& name);
std::string to_string(StudyKind kind);

struct AxisSpec {
    int n = 32;
    double lo = 0;
    double hi = 6.283185307179586;
    std::string profile = "uniform";  // uniform | tanh | cosine | stretched
    double param = 1.5;               // tanh gamma or stretching factor
    std::string bc = "periodic";      // periodic | noslip | symmetric
};

struct RunConfig {
    // [run]
    StudyKind study = StudyKind::simulate;
    bool study_set = false;
    Precision precision = Precision::f64;
    std::uint64_t seed = 42;
    std::string output = "stagflow-out";
    int threads = 0;
    int cadence = 10;

    // [grid] and [bc]
    int dim = 2;
    std::array<AxisSpec, 3> axes{};

    // [physics]
    double nu = 0.01;
    std::string initial = "taylor-green";  // taylor-green | zero | random
    std::array<double, 3> force{0, 0, 0};
    bool convection = true;

    // [closure]
    ClosureKind closure = ClosureKind::none;
    double closure_c = std::numeric_limits<double>::quiet_NaN();  // NaN selects the model default
    FilterRule filter = FilterRule::per_axis;
    double closure_p = -2.5;

    // [solver]
    std::string solver = "auto";  // auto picks spectral on periodic uniform grids, else direct
    double solver_tol = 0;
    int solver_max_iter = 0;

    // [time]
    RkMethod method = RkMethod::ssp33;
    bool adaptive = false;
    double dt = 0.01;
    double t_final = 1.0;
    double c_conv = 0.85;
    double c_diff = 0.85;
    double dt_max = std::numeric_limits<double>::infinity();
    long max_steps = 0;

    // [convergence]
    std::vector<int> ns{16, 32, 64, 128, 256};
    double conv_gamma = 0;
    double conv_cfl = 0.25;

    // [vcurve]
    double h_lo_exp = -12;
    double h_hi_exp = 0;
    int per_decade = 10;

    // [adjoint]
    int adjoint_trials = 50;
    double adjoint_eps = 1e-6;
    double adjoint_tol = 1e-5;

    // [channel]
    ChannelOptions channel{};
    long channel_steps = 500;
    int stats_every = 10;
    double div_tol = 1e-8;
    bool write_snapshot = true;

    // Source line of every key set from the file (absent when defaulted).
    std::map<std::string, int> lines;

    bool operator==(const RunConfig& o) const;
};

/// Parses "[section]" / "key = value" text, then applies "section.key=value"
/// overrides. Comments start with '#' or ';'. Every key must be known and
/// run.study must be given. Cross-field checks run last.
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
/// Applies one "section.key=value" override.
void apply_override(RunConfig& cfg, const std::string& assignment);
/// Cross-field checks; throws ConfigError naming the key.
void validate(const RunConfig& cfg);
/// Complete config text; parse_config(effective_config(c)) == c.
std::string effective_config(const RunConfig& cfg);
/// Every accepted "section.key", in emission order.
std::vector<std::string> config_keys();

/// Solver for the grid the study runs on; resolves "auto".
PoissonKind resolve_solver(const RunConfig& cfg, bool periodic_uniform);

/// Default thread count from STAGFLOW_THREADS, or 0 when unset.
int threads_from_env();

}  // namespace stagflow
