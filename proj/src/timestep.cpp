#include "stagflow/timestep.hpp"

#include <cmath>
#include <string>

namespace stagflow {

RkMethod parse_rk_method(const std::string& name) {
    if (name == "ssp33") return RkMethod::ssp33;
    if (name == "wray3") return RkMethod::wray3;
    throw InvalidArgument("unknown time integration method '" + name + "'");
}

std::string to_string(RkMethod m) { return m == RkMethod::wray3 ? "wray3" : "ssp33"; }

int register_count(RkMethod m) { return m == RkMethod::wray3 ? 2 : 4; }

template <typename T>
void ButcherTableau<T>::validate() const {
    if (stages < 1 || a.size() != static_cast<std::size_t>(stages * stages) || b.size() != static_cast<std::size_t>(stages) ||
        c.size() != static_cast<std::size_t>(stages))
        throw InvalidArgument("tableau: inconsistent sizes");
    T sb = 0;
    for (T v : b) sb += v;
    if (std::abs(sb - T(1)) > T(64) * std::numeric_limits<T>::epsilon()) throw InvalidArgument("tableau: sum(b) != 1");
    for (int i = 0; i < stages; ++i) {
        T row = 0;
        for (int j = 0; j < stages; ++j) {
            if (j >= i && A(i, j) != T(0)) throw InvalidArgument("tableau: not explicit");
            row += A(i, j);
        }
        if (std::abs(row - c[i]) > T(64) * std::numeric_limits<T>::epsilon())
            throw InvalidArgument("tableau: c_i != sum_j a_ij");
    }
}

template <typename T>
ButcherTableau<T> ButcherTableau<T>::ssp33() {
    ButcherTableau t;
    t.stages = 3;
    t.a = {0, 0, 0, 1, 0, 0, T(1) / 4, T(1) / 4, 0};
    t.b = {T(1) / 6, T(1) / 6, T(2) / 3};
    t.c = {0, 1, T(1) / 2};
    return t;
}

template <typename T>
ButcherTableau<T> ButcherTableau<T>::wray3() {
    ButcherTableau t;
    t.stages = 3;
    t.a = {0, 0, 0, T(8) / 15, 0, 0, T(1) / 4, T(5) / 12, 0};
    t.b = {T(1) / 4, 0, T(3) / 4};
    t.c = {0, T(8) / 15, T(2) / 3};
    return t;
}

template <typename T>
void FlowSetup<T>::set_force(const std::array<T, 3>& f) {
    force = VelocityField<T>(grid);
    for (int c = 0; c < grid.dim; ++c)
        for_box(grid, velocity_dofs(grid, c), [&](int, int, int, std::ptrdiff_t idx) { force[c][idx] = f[c]; });
}

template <typename T>
SimState<T>::SimState(const Grid<T>& g, VelocityField<T> u0, T t0, RkMethod method)
    : u(std::move(u0)), t(t0), p(g), div(g), nu_t(g) {
    reg.assign(register_count(method), VelocityField<T>(g));
}

template <typename T>
T cfl_dt(const Grid<T>& g, const VelocityField<T>& u, T nu, T c_conv, T c_diff) {
    if (!(c_conv > 0) || !(c_diff > 0)) throw InvalidArgument("cfl_dt: factors must be > 0");
    T best = std::numeric_limits<T>::infinity();
    for (int a = 0; a < g.dim; ++a) {
        const auto& h = g.dual[a];
        const auto& f = u[a];
        for_box(g, velocity_dofs(g, a), [&](int i, int j, int k, std::ptrdiff_t idx) {
            const T v = std::abs(f[idx]);
            if (v > T(0)) {
                const int ia = a == 0 ? i : a == 1 ? j : k;
                best = std::min(best, c_conv * h[ia] / v);
            }
        });
    }
    if (nu > T(0)) {
        T hmin = std::numeric_limits<T>::infinity();
        for (int a = 0; a < g.dim; ++a) hmin = std::min(hmin, g.min_width(a));
        best = std::min(best, c_diff * hmin * hmin / (T(2) * g.dim * nu));
    }
    return best;
}

namespace {

// out = base + dt * sum_j w_j k_j over whole arrays (k vanishes off the degrees of freedom).
template <typename T>
void combine(const Grid<T>& g, VelocityField<T>& out, const VelocityField<T>& base, T dt, const T* w,
             const VelocityField<T>* const* k, int nk) {
    for (int c = 0; c < g.dim; ++c) {
        T* o = out[c].data.data();
        const T* b = base[c].data.data();
        const std::size_t n = out[c].size();
        for (std::size_t q = 0; q < n; ++q) {
            T s = 0;
            for (int j = 0; j < nk; ++j) s += w[j] * (*k[j])[c].data[q];
            o[q] = b[q] + dt * s;
        }
    }
}

// out += dt * (w1 k1 + w2 k2)
template <typename T>
void axpy2(const Grid<T>& g, VelocityField<T>& out, T dt, T w1, const VelocityField<T>& k1, T w2,
           const VelocityField<T>* k2) {
    for (int c = 0; c < g.dim; ++c) {
        T* o = out[c].data.data();
        const T* a = k1[c].data.data();
        const std::size_t n = out[c].size();
        if (k2) {
            const T* b = (*k2)[c].data.data();
            for (std::size_t q = 0; q < n; ++q) o[q] += dt * (w1 * a[q] + w2 * b[q]);
        } else {
            for (std::size_t q = 0; q < n; ++q) o[q] += dt * (w1 * a[q]);
        }
    }
}

template <typename T>
bool all_finite(const Grid<T>& g, const VelocityField<T>& u) {
    for (int c = 0; c < g.dim; ++c)
        for (T v : u[c].data)
            if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

template <typename T>
void rk_step(const FlowSetup<T>& setup, SimState<T>& state, T dt, const ButcherTableau<T>& tab,
             PoissonSolver<T>& solver, std::vector<VelocityField<T>>* tape) {
    if (!(dt > 0)) throw InvalidArgument("rk_step: dt must be > 0");
    const Grid<T>& g = setup.grid;
    const int s = tab.stages;
    if (static_cast<int>(state.reg.size()) < s + 1) state.reg.resize(s + 1, VelocityField<T>(g));
    const MomentumTerms<T> terms = setup.terms();

    VelocityField<T>& u0 = state.reg[0];
    fill_ghosts_velocity(g, state.u, state.t);
    u0 = state.u;

    std::array<const VelocityField<T>*, 8> kp{};
    std::array<T, 8> w{};
    for (int i = 0; i < s; ++i) {
        const T ti = state.t + tab.c[i] * dt;
        if (i > 0) {
            for (int j = 0; j < i; ++j) {
                kp[j] = &state.reg[1 + j];
                w[j] = tab.A(i, j);
            }
            combine(g, state.u, u0, dt, w.data(), kp.data(), i);
            fill_ghosts_velocity(g, state.u, ti);
            project(g, state.u, solver, ti, state.p, state.div);
        }
        if (tape) tape->push_back(state.u);
        momentum_rhs(g, state.u, terms, state.reg[1 + i], state.nu_t);
    }
    for (int j = 0; j < s; ++j) {
        kp[j] = &state.reg[1 + j];
        w[j] = tab.b[j];
    }
    const T t1 = state.t + dt;
    combine(g, state.u, u0, dt, w.data(), kp.data(), s);
    fill_ghosts_velocity(g, state.u, t1);
    project(g, state.u, solver, t1, state.p, state.div);
    state.t = t1;
}

template <typename T>
void wray3_step(const FlowSetup<T>& setup, SimState<T>& state, T dt, PoissonSolver<T>& solver) {
    if (!(dt > 0)) throw InvalidArgument("wray3_step: dt must be > 0");
    static constexpr T gamma[3] = {T(8) / 15, T(5) / 12, T(3) / 4};
    static constexpr T zeta[3] = {T(0), T(-17) / 60, T(-5) / 12};
    static constexpr T cnext[3] = {T(8) / 15, T(2) / 3, T(1)};
    const Grid<T>& g = setup.grid;
    if (state.reg.size() < 2) state.reg.resize(2, VelocityField<T>(g));
    const MomentumTerms<T> terms = setup.terms();
    VelocityField<T>* r_new = &state.reg[0];
    VelocityField<T>* r_old = &state.reg[1];

    fill_ghosts_velocity(g, state.u, state.t);
    for (int i = 0; i < 3; ++i) {
        momentum_rhs(g, state.u, terms, *r_new, state.nu_t);
        axpy2(g, state.u, dt, gamma[i], *r_new, zeta[i], i > 0 ? r_old : nullptr);
        const T ti = state.t + cnext[i] * dt;
        fill_ghosts_velocity(g, state.u, ti);
        project(g, state.u, solver, ti, state.p, state.div);
        std::swap(r_new, r_old);
    }
    state.t += dt;
}

template <typename T>
long simulate(const FlowSetup<T>& setup, SimState<T>& state, PoissonSolver<T>& solver, T t_final,
              const StepControl<T>& control, const std::vector<Observer<T>>& observers) {
    if (t_final < state.t) throw InvalidArgument("simulate: t_final before current time");
    if (!control.adaptive && !(control.dt > 0)) throw InvalidArgument("simulate: fixed dt must be > 0");
    const Grid<T>& g = setup.grid;
    const ButcherTableau<T> tab = control.method == RkMethod::ssp33 ? ButcherTableau<T>::ssp33() : ButcherTableau<T>::wray3();
    const T slack = T(8) * std::numeric_limits<T>::epsilon() * std::max(std::abs(t_final), T(1));
    const int cadence = std::max(1, control.cadence);
    long steps = 0;
    while (t_final - state.t > slack && (control.max_steps <= 0 || steps < control.max_steps)) {
        T dt = control.dt;
        if (control.adaptive) dt = std::min(cfl_dt(g, state.u, setup.nu, control.c_conv, control.c_diff), control.dt_max);
        if (!(dt > 0) || !std::isfinite(dt))
            throw NumericalFailure("simulate: invalid time step at t = " + std::to_string(double(state.t)));
        const bool last = state.t + dt >= t_final - slack;
        if (last) dt = t_final - state.t;
        const T t_prev = state.t;
        try {
            if (control.method == RkMethod::wray3)
                wray3_step(setup, state, dt, solver);
            else
                rk_step(setup, state, dt, tab, solver);
        } catch (const NumericalFailure& e) {
            if (control.method == RkMethod::ssp33) state.u = state.reg[0];
            state.t = t_prev;
            throw NumericalFailure(std::string(e.what()) + " (last good t = " + std::to_string(double(t_prev)) +
                                   ", step " + std::to_string(steps) + ")");
        }
        if (!all_finite(g, state.u)) {
            if (control.method == RkMethod::ssp33) state.u = state.reg[0];
            state.t = t_prev;
            throw NumericalFailure("simulate: non-finite velocity (last good t = " + std::to_string(double(t_prev)) +
                                   ", step " + std::to_string(steps) + ")");
        }
        if (last) state.t = t_final;
        ++steps;
        if (steps % cadence == 0)
            for (const auto& obs : observers) obs(state, steps);
    }
    return steps;
}

#define STAGFLOW_INSTANTIATE(T)                                                                                  \
    template struct ButcherTableau<T>;                                                                          \
    template struct FlowSetup<T>;                                                                               \
    template struct SimState<T>;                                                                                \
    template T cfl_dt<T>(const Grid<T>&, const VelocityField<T>&, T, T, T);                                     \
    template void rk_step<T>(const FlowSetup<T>&, SimState<T>&, T, const ButcherTableau<T>&, PoissonSolver<T>&, \
                             std::vector<VelocityField<T>>*);                                                   \
    template void wray3_step<T>(const FlowSetup<T>&, SimState<T>&, T, PoissonSolver<T>&);                       \
    template long simulate<T>(const FlowSetup<T>&, SimState<T>&, PoissonSolver<T>&, T, const StepControl<T>&,   \
                              const std::vector<Observer<T>>&);

STAGFLOW_INSTANTIATE(float)
STAGFLOW_INSTANTIATE(double)

}  // namespace stagflow
