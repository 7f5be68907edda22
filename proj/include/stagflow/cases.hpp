#pragma once

#include <cstdint>
#include <memory>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "stagflow/timestep.hpp"

namespace stagflow {

enum class Precision { f32, f64 };
Precision parse_precision(const std::string& name);
std::string to_string(Precision p);

/// Taylor-Green vortex on the periodic square [0, 2π]²: velocity at faces,
/// pressure at centres, ghosts filled.
template <typename T>
std::pair<VelocityField<T>, ScalarField<T>> taylor_green(const Grid<T>& g, T nu, T t);

/// Volume-weighted L2 norm of a - b over interior velocity DOFs.
template <typename T>
T l2_error(const Grid<T>& g, const VelocityField<T>& a, const VelocityField<T>& b);

struct ConvergenceOptions {
    std::vector<int> ns{16, 32, 64, 128, 256};
    Precision precision = Precision::f64;
    PoissonKind solver = PoissonKind::spectral;
    RkMethod method = RkMethod::ssp33;
    double nu = 0.01;
    double t_final = 1.0;
    double tanh_gamma = 0;  // 0 selects a uniform grid
    double cfl = 0.25;      // Δt = cfl · smallest width
};

struct ConvergenceRow {
    int n = 0;
    double error = 0;
    double order = std::numeric_limits<double>::quiet_NaN();  // log2 ratio to the previous row
    double dt = 0;
    long steps = 0;
};

/// Taylor-Green error at t_final for each N.
std::vector<ConvergenceRow> convergence_study(const ConvergenceOptions& opts);

/// Single Taylor-Green run; returns the L2 velocity error at t_final.
template <typename T>
ConvergenceRow taylor_green_run(int n, const ConvergenceOptions& opts, double dt_override = 0);

struct VCurveRow {
    double h = 0;
    double err1 = 0;  // forward difference
    double err2 = 0;  // central difference
};

/// Errors of one-sided and central differences of sin at fixed sample points,
/// evaluated entirely in the requested precision.
std::vector<VCurveRow> fd_vcurve(const std::vector<double>& hs, Precision precision);
/// h values 10^e for e from lo to hi in steps of 1/per_decade.
std::vector<double> log_spaced(double lo_exp, double hi_exp, int per_decade);
/// h minimising err1 (order 1) or err2 (order 2).
double vcurve_argmin(const std::vector<VCurveRow>& rows, int order);

struct ChannelOptions {
    int nx = 32, ny = 48, nz = 16;
    double gamma = 1.5;  // tanh clustering toward the walls; 0 gives a uniform y axis
    double nu = 1.0 / 180;
    double centerline = 20;         // peak of the parabolic initial profile
    double perturbation = 0.1;      // relative amplitude of the sinusoidal perturbation
    std::uint64_t seed = 42;
    int modes = 4;
    PoissonKind solver = PoissonKind::direct;
    ClosureKind closure = ClosureKind::none;
};

template <typename T>
struct ChannelCase {
    FlowSetup<T> setup;
    VelocityField<T> u0;
};

/// Box 4π × 2 × 4π/3, periodic in x and z, no-slip walls at y = 0 and 2,
/// unit body force along x. Initial data is divergence-free; the projection
/// uses solver when given, otherwise a fresh one of opts.solver kind.
template <typename T>
ChannelCase<T> channel_setup(const ChannelOptions& opts, PoissonSolver<T>* solver = nullptr);

/// Grid of the channel box alone.
template <typename T>
Grid<T> channel_grid(const ChannelOptions& opts);

/// Laminar Poiseuille profile y(2 - y) f / (2ν).
inline double poiseuille(double y, double nu, double f = 1.0) { return y * (2 - y) * f / (2 * nu); }

}  // namespace stagflow
