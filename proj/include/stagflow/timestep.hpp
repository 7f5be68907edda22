#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "stagflow/les.hpp"
#include "stagflow/operators.hpp"
#include "stagflow/poisson.hpp"

namespace stagflow {

template <typename T>
struct ButcherTableau {
    int stages = 0;
    std::vector<T> a;  // row-major stages x stages, strictly lower
    std::vector<T> b;
    std::vector<T> c;

    T A(int i, int j) const { return a[static_cast<std::size_t>(i) * stages + j]; }
    void validate() const;

    static ButcherTableau ssp33();
    // Tableau equivalent to the low-storage Wray3 scheme.
    static ButcherTableau wray3();
};

enum class RkMethod { ssp33, wray3 };
RkMethod parse_rk_method(const std::string& name);
std::string to_string(RkMethod m);

/// Physical problem: grid, viscosity, body force and closure.
template <typename T>
struct FlowSetup {
    Grid<T> grid;
    T nu = 0;
    bool convection = true;
    VelocityField<T> force;  // sampled at velocity points; empty dim means none
    ClosureModel<T> closure;

    FlowSetup() = default;
    FlowSetup(Grid<T> g, T nu_) : grid(std::move(g)), nu(nu_) {}

    void set_force(const std::array<T, 3>& f);
    MomentumTerms<T> terms() const {
        MomentumTerms<T> t;
        t.nu = nu;
        t.convection = convection;
        t.force = force.dim > 0 ? &force : nullptr;
        t.closure = closure.active() ? &closure : nullptr;
        return t;
    }
};

/// Velocity, time and every buffer a step needs; sized once.
template <typename T>
struct SimState {
    VelocityField<T> u;
    T t = 0;
    ScalarField<T> p, div, nu_t;
    std::vector<VelocityField<T>> reg;  // RK registers

    SimState() = default;
    SimState(const Grid<T>& g, VelocityField<T> u0, T t0, RkMethod method);
    // Velocity-shaped buffers held: the state plus its registers.
    int velocity_buffers() const { return 1 + static_cast<int>(reg.size()); }
};

/// Registers needed by each method: explicit tableau s+1, Wray3 two.
int register_count(RkMethod m);

template <typename T>
T cfl_dt(const Grid<T>& g, const VelocityField<T>& u, T nu, T c_conv, T c_diff);

/// One explicit RK step with projection after every stage. If tape is given,
/// the ghost-filled input of each stage is appended to it.
template <typename T>
void rk_step(const FlowSetup<T>& setup, SimState<T>& state, T dt, const ButcherTableau<T>& tab,
             PoissonSolver<T>& solver, std::vector<VelocityField<T>>* tape = nullptr);

/// Low-storage three-register Wray3 step.
template <typename T>
void wray3_step(const FlowSetup<T>& setup, SimState<T>& state, T dt, PoissonSolver<T>& solver);

template <typename T>
struct StepControl {
    RkMethod method = RkMethod::ssp33;
    bool adaptive = false;
    T dt = T(0);  // fixed step
    T c_conv = T(0.85);
    T c_diff = T(0.85);
    T dt_max = std::numeric_limits<T>::infinity();
    int cadence = 1;     // observer period in steps
    long max_steps = 0;  // stop early after this many steps; 0 means no limit
};

template <typename T>
using Observer = std::function<void(const SimState<T>&, long step)>;

/// Advances to t_final (or max_steps), truncating the last step. Returns the number of steps.
/// On solver failure or non-finite values the state is left at the last good
/// step (when a copy is available) and NumericalFailure is thrown.
template <typename T>
long simulate(const FlowSetup<T>& setup, SimState<T>& state, PoissonSolver<T>& solver, T t_final,
              const StepControl<T>& control, const std::vector<Observer<T>>& observers = {});

}  // namespace stagflow
