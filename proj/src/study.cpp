#include "stagflow/study.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "stagflow/adjoint.hpp"
#include "stagflow/stats.hpp"

namespace stagflow {

namespace fs = std::filesystem;

template <typename T>
Grid<T> grid_from_config(const RunConfig& cfg) {
    std::vector<AxisCoords<T>> axes;
    BoundarySpec<T> bc;
    for (int a = 0; a < cfg.dim; ++a) {
        const AxisSpec& s = cfg.axes[a];
        const T lo = static_cast<T>(s.lo), hi = static_cast<T>(s.hi), q = static_cast<T>(s.param);
        if (s.profile == "uniform")
            axes.push_back(uniform_grid<T>(lo, hi, s.n));
        else if (s.profile == "tanh")
            axes.push_back(tanh_grid<T>(lo, hi, s.n, q));
        else if (s.profile == "cosine")
            axes.push_back(cosine_grid<T>(lo, hi, s.n));
        else if (s.profile == "stretched")
            axes.push_back(stretched_grid<T>(lo, hi, s.n, q));
        else
            throw InvalidArgument("unknown grid profile '" + s.profile + "'");
        BoundarySide<T> side = BoundarySide<T>::periodic();
        if (s.bc == "noslip") side = BoundarySide<T>::noslip();
        if (s.bc == "symmetric") side = BoundarySide<T>::symmetric();
        bc.sides[a] = {side, side};
    }
    return build_grid<T>(axes, bc);
}

template Grid<float> grid_from_config<float>(const RunConfig&);
template Grid<double> grid_from_config<double>(const RunConfig&);

//------------------------------------------------------------------------------
// Adjoint checks
//------------------------------------------------------------------------------

namespace {

using Vel = VelocityField<double>;
using Sca = ScalarField<double>;

Vel random_vel(const Grid<double>& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Vel u(g);
    for (int c = 0; c < g.dim; ++c)
        for_box(g, velocity_dofs(g, c), [&](int, int, int, std::ptrdiff_t idx) { u[c][idx] = U(rng); });
    fill_ghosts_velocity(g, u, 0.0);
    return u;
}

Sca random_sca(const Grid<double>& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Sca p(g);
    for_box(g, pressure_dofs(g), [&](int, int, int, std::ptrdiff_t idx) { p[idx] = U(rng); });
    fill_ghosts_scalar(g, p);
    return p;
}

double dot(const Grid<double>& g, const Vel& a, const Vel& b) {
    double s = 0;
    for (int c = 0; c < g.dim; ++c)
        for_box(g, velocity_dofs(g, c), [&](int, int, int, std::ptrdiff_t idx) { s += a[c][idx] * b[c][idx]; });
    return s;
}

double dot(const Grid<double>& g, const Sca& a, const Sca& b) {
    double s = 0;
    for_box(g, pressure_dofs(g), [&](int, int, int, std::ptrdiff_t idx) { s += a[idx] * b[idx]; });
    return s;
}

Vel axpy(const Grid<double>& g, const Vel& u, double s, const Vel& v) {
    Vel r = u;
    for (int c = 0; c < g.dim; ++c)
        for (std::size_t q = 0; q < r[c].size(); ++q) r[c][q] += s * v[c][q];
    fill_ghosts_velocity(g, r, 0.0);
    return r;
}

Sca axpy(const Grid<double>& g, const Sca& p, double s, const Sca& q) {
    Sca r = p;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += s * q[i];
    fill_ghosts_scalar(g, r);
    return r;
}

Vel diff(const Grid<double>& g, const Vel& a, const Vel& b, double s) {
    Vel r = a;
    for (int c = 0; c < g.dim; ++c)
        for (std::size_t q = 0; q < r[c].size(); ++q) r[c][q] = (a[c][q] - b[c][q]) * s;
    return r;
}

Sca diff(const Grid<double>&, const Sca& a, const Sca& b, double s) {
    Sca r = a;
    for (std::size_t q = 0; q < r.size(); ++q) r[q] = (a[q] - b[q]) * s;
    return r;
}

// Gap between <w, Jv> and <J^T w, v>, relative to the Cauchy-Schwarz scale |w| |Jv|.
double rel_gap(double fd, double ad, double scale) {
    scale = std::max({scale, std::abs(fd), std::abs(ad)});
    return scale > 0 ? std::abs(fd - ad) / scale : 0.0;
}

// F maps In -> Out linearly or not; pullback(w) gives J^T w at x.
template <typename In, typename Out, typename F, typename P>
double fd_gap(const Grid<double>& g, const In& x, const In& v, const Out& w, double eps, F&& f, P&& pullback) {
    const Out jv = diff(g, f(axpy(g, x, eps, v)), f(axpy(g, x, -eps, v)), 1 / (2 * eps));
    const double fd = dot(g, w, jv);
    const double ad = dot(g, pullback(w), v);
    return rel_gap(fd, ad, std::sqrt(dot(g, w, w) * dot(g, jv, jv)));
}

}  // namespace

std::vector<AdjointCheckRow> adjoint_check(const Grid<double>& g, const AdjointCheckOptions& o) {
    if (!g.all_periodic()) throw UnsupportedConfiguration("adjoint-check needs a periodic grid");
    auto solver = make_poisson_solver(g, o.solver);
    const double e = o.eps;
    std::mt19937_64 rng(o.seed);
    std::vector<AdjointCheckRow> rows;
    auto record = [&](const std::string& name, auto&& trial) {
        AdjointCheckRow row{name, 0.0, false};
        for (int t = 0; t < o.trials; ++t) row.max_rel_error = std::max(row.max_rel_error, trial());
        row.pass = row.max_rel_error <= o.tol;
        rows.push_back(row);
    };

    record("divergence", [&] {
        const Vel u = random_vel(g, rng), v = random_vel(g, rng);
        const Sca w = random_sca(g, rng);
        return fd_gap(g, u, v, w, e, [&](const Vel& x) { return divergence(g, x); },
                      [&](const Sca& y) { return divergence_pullback(g, y); });
    });
    record("gradient", [&] {
        const Sca p = random_sca(g, rng), q = random_sca(g, rng);
        const Vel w = random_vel(g, rng);
        return fd_gap(g, p, q, w, e, [&](const Sca& x) { return pressure_gradient(g, x); },
                      [&](const Vel& y) { return pressure_gradient_pullback(g, y); });
    });
    record("diffusion", [&] {
        const Vel u = random_vel(g, rng), v = random_vel(g, rng), w = random_vel(g, rng);
        return fd_gap(g, u, v, w, e, [&](const Vel& x) { return diffusion(g, x, o.nu); },
                      [&](const Vel& y) { return diffusion_pullback(g, y, o.nu); });
    });
    record("convection", [&] {
        const Vel u = random_vel(g, rng), v = random_vel(g, rng), w = random_vel(g, rng);
        return fd_gap(g, u, v, w, e, [&](const Vel& x) { return convection(g, x); },
                      [&](const Vel& y) { return convection_pullback(g, y, u); });
    });
    record("poisson", [&] {
        const Sca r = random_sca(g, rng), s = random_sca(g, rng), w = random_sca(g, rng);
        return fd_gap(g, r, s, w, e, [&](const Sca& x) { return solver->solve(x); },
                      [&](const Sca& y) { return poisson_pullback(g, y, *solver); });
    });
    record("projection", [&] {
        const Vel u = random_vel(g, rng), v = random_vel(g, rng), w = random_vel(g, rng);
        return fd_gap(g, u, v, w, e, [&](const Vel& x) { return project(g, x, *solver).first; },
                      [&](const Vel& y) { return projection_pullback(g, y, *solver); });
    });

    const FlowSetup<double> setup(g, o.nu);
    const auto tab = o.method == RkMethod::wray3 ? ButcherTableau<double>::wray3() : ButcherTableau<double>::ssp33();
    for (int k : {1, 3}) {
        record("rk_step_x" + std::to_string(k), [&] {
            const Vel u0 = project(g, random_vel(g, rng), *solver).first;
            const Vel v = random_vel(g, rng);
            const auto loss = linear_loss<double>(random_vel(g, rng));
            const double fd = (unrolled_loss(setup, *solver, tab, axpy(g, u0, e, v), k, o.dt, loss) -
                               unrolled_loss(setup, *solver, tab, axpy(g, u0, -e, v), k, o.dt, loss)) /
                              (2 * e);
            const Vel grad = unrolled_gradient(setup, *solver, tab, u0, k, o.dt, loss);
            return rel_gap(fd, dot(g, grad, v), std::sqrt(dot(g, grad, grad) * dot(g, v, v)));
        });
    }
    return rows;
}

//------------------------------------------------------------------------------
// Study drivers
//------------------------------------------------------------------------------

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Run {
    const RunConfig& cfg;
    std::ostream* echo;
    fs::path dir;
    std::string results;  // csv body, written even on failure
    std::string log;

    void note(const std::string& line) {
        log += line + "\n";
        if (echo) *echo << line << "\n" << std::flush;
    }
    void header(const std::string& columns) { results = "# stagflow " + to_string(cfg.study) + " v1\n" + columns + "\n"; }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t q = 0; q < cells.size(); ++q) results += (q ? "," : "") + cells[q];
        results += "\n";
    }
};

template <typename T>
ClosureModel<T> closure_from_config(const RunConfig& cfg, double default_c) {
    ClosureModel<T> m;
    m.kind = cfg.closure;
    m.C = static_cast<T>(std::isnan(cfg.closure_c) ? default_c : cfg.closure_c);
    m.filter = cfg.filter;
    m.p = static_cast<T>(cfg.closure_p);
    return m;
}

PoissonOptions poisson_options(const RunConfig& cfg) {
    PoissonOptions o;
    o.tol = cfg.solver_tol;
    o.max_iter = cfg.solver_max_iter;
    return o;
}

template <typename T>
T max_div(const Grid<T>& g, const VelocityField<T>& u, ScalarField<T>& buf) {
    divergence(g, u, buf);
    return max_abs_interior(g, buf);
}

template <typename T>
int simulate_study(Run& run) {
    const RunConfig& cfg = run.cfg;
    const Grid<T> g = grid_from_config<T>(cfg);
    bool periodic_uniform = g.all_periodic() && g.all_uniform();
    const PoissonKind kind = resolve_solver(cfg, periodic_uniform);
    auto solver = make_poisson_solver(g, kind, poisson_options(cfg));

    FlowSetup<T> setup(g, static_cast<T>(cfg.nu));
    setup.convection = cfg.convection;
    if (cfg.force != std::array<double, 3>{0, 0, 0})
        setup.set_force({static_cast<T>(cfg.force[0]), static_cast<T>(cfg.force[1]), static_cast<T>(cfg.force[2])});
    setup.closure = closure_from_config<T>(cfg, default_closure_constant(cfg.closure));

    const bool tg = cfg.initial == "taylor-green";
    VelocityField<T> u0(g);
    if (tg) {
        u0 = taylor_green(g, setup.nu, T(0)).first;
    } else if (cfg.initial == "random") {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (int c = 0; c < g.dim; ++c)
            for_box(g, velocity_dofs(g, c), [&](int, int, int, std::ptrdiff_t idx) { u0[c][idx] = static_cast<T>(U(rng)); });
        fill_ghosts_velocity(g, u0, T(0));
    }
    u0 = project(g, u0, *solver).first;

    run.note("simulate: grid " + std::to_string(g.n[0]) + "x" + std::to_string(g.n[1]) + "x" + std::to_string(g.n[2]) +
             ", solver " + to_string(kind) + ", method " + to_string(cfg.method) + ", precision " +
             to_string(cfg.precision));
    run.header(tg ? "step,t,dt,kinetic_energy,max_div,l2_error" : "step,t,dt,kinetic_energy,max_div");

    ScalarField<T> buf(g);
    auto emit = [&](const SimState<T>& s, long step, double dt) {
        const double ke = kinetic_energy(g, s.u), dv = max_div(g, s.u, buf);
        std::vector<std::string> cells{std::to_string(step), num(s.t), num(dt), num(ke), num(dv)};
        if (tg) cells.push_back(num(l2_error(g, s.u, taylor_green(g, setup.nu, s.t).first)));
        run.row(cells);
        run.note("step " + std::to_string(step) + " t=" + num(s.t) + " ke=" + num(ke) + " max_div=" + num(dv));
    };

    SimState<T> state(g, u0, T(0), cfg.method);
    emit(state, 0, 0.0);
    StepControl<T> control;
    control.method = cfg.method;
    control.adaptive = cfg.adaptive;
    control.dt = static_cast<T>(cfg.dt);
    control.c_conv = static_cast<T>(cfg.c_conv);
    control.c_diff = static_cast<T>(cfg.c_diff);
    control.dt_max = static_cast<T>(cfg.dt_max);
    control.max_steps = cfg.max_steps;
    control.cadence = 1;
    double t_prev = 0, last_dt = 0;
    long last_emitted = 0;
    const Observer<T> obs = [&](const SimState<T>& s, long step) {
        last_dt = double(s.t) - t_prev;
        t_prev = s.t;
        if (step % cfg.cadence == 0) {
            emit(s, step, last_dt);
            last_emitted = step;
        }
    };
    const long steps = simulate(setup, state, *solver, static_cast<T>(cfg.t_final), control, {obs});
    if (last_emitted != steps) emit(state, steps, last_dt);
    write_snapshot(run.dir / "snapshot.bin", g, state.u, state.t);
    run.note("done: " + std::to_string(steps) + " steps, t = " + num(state.t));
    return exit_ok;
}

int convergence_run(Run& run) {
    const RunConfig& cfg = run.cfg;
    ConvergenceOptions o;
    o.ns = cfg.ns;
    o.precision = cfg.precision;
    o.solver = resolve_solver(cfg, cfg.conv_gamma == 0);
    o.method = cfg.method;
    o.nu = cfg.nu;
    o.t_final = cfg.t_final;
    o.tanh_gamma = cfg.conv_gamma;
    o.cfl = cfg.conv_cfl;
    run.note("convergence: precision " + to_string(o.precision) + ", solver " + to_string(o.solver) + ", method " +
             to_string(o.method) + (o.tanh_gamma > 0 ? ", tanh gamma " + num(o.tanh_gamma) : ", uniform"));
    run.header("N,error,order");
    for (const auto& r : convergence_study(o)) {
        run.row({std::to_string(r.n), num(r.error), num(r.order)});
        run.note("N=" + std::to_string(r.n) + " error=" + num(r.error) + " order=" + num(r.order) + " dt=" + num(r.dt) +
                 " steps=" + std::to_string(r.steps));
    }
    return exit_ok;
}

int vcurve_run(Run& run) {
    const RunConfig& cfg = run.cfg;
    const auto hs = log_spaced(cfg.h_lo_exp, cfg.h_hi_exp, cfg.per_decade);
    const auto rows = fd_vcurve(hs, cfg.precision);
    run.header("h,err_order1,err_order2");
    for (const auto& r : rows) run.row({num(r.h), num(r.err1), num(r.err2)});
    const double eps = cfg.precision == Precision::f64 ? std::numeric_limits<double>::epsilon()
                                                       : double(std::numeric_limits<float>::epsilon());
    run.note("vcurve: precision " + to_string(cfg.precision) + ", " + std::to_string(hs.size()) + " spacings");
    run.note("argmin order 1: h=" + num(vcurve_argmin(rows, 1)) + " (eps^(1/2) = " + num(std::sqrt(eps)) + ")");
    run.note("argmin order 2: h=" + num(vcurve_argmin(rows, 2)) + " (eps^(1/3) = " + num(std::cbrt(eps)) + ")");
    return exit_ok;
}

int adjoint_run(Run& run) {
    const RunConfig& cfg = run.cfg;
    const Grid<double> g = grid_from_config<double>(cfg);
    AdjointCheckOptions o;
    o.trials = cfg.adjoint_trials;
    o.eps = cfg.adjoint_eps;
    o.tol = cfg.adjoint_tol;
    o.seed = cfg.seed;
    o.solver = resolve_solver(cfg, g.all_uniform());
    o.method = cfg.method;
    o.nu = cfg.nu;
    o.dt = cfg.dt;
    run.note("adjoint-check: " + std::to_string(o.trials) + " trials, eps " + num(o.eps) + ", tolerance " + num(o.tol) +
             ", solver " + to_string(o.solver));
    run.header("operator,fd_rel_error,pass");
    bool ok = true;
    for (const auto& r : adjoint_check(g, o)) {
        run.row({r.op, num(r.max_rel_error), r.pass ? "pass" : "fail"});
        run.note(r.op + ": max relative error " + num(r.max_rel_error) + (r.pass ? " pass" : " FAIL"));
        ok = ok && r.pass;
    }
    return ok ? exit_ok : exit_numerical;
}

template <typename T>
int channel_run(Run& run) {
    const RunConfig& cfg = run.cfg;
    ChannelOptions opts = cfg.channel;
    opts.seed = cfg.seed;
    opts.closure = cfg.closure;
    opts.solver = resolve_solver(cfg, false);
    const Grid<T> g = channel_grid<T>(opts);
    auto solver = make_poisson_solver(g, opts.solver, poisson_options(cfg));
    ChannelCase<T> cc = channel_setup<T>(opts, solver.get());
    cc.setup.closure = closure_from_config<T>(cfg, channel_closure_constant(cfg.closure));

    run.note("channel-smoke: grid " + std::to_string(g.n[0]) + "x" + std::to_string(g.n[1]) + "x" +
             std::to_string(g.n[2]) + ", solver " + to_string(opts.solver) + ", method " + to_string(cfg.method) +
             ", closure " + to_string(cfg.closure) + ", " + std::to_string(cfg.channel_steps) + " steps");
    run.header("step,t,dt,kinetic_energy,max_div");

    ChannelStatistics<T> stats(g, opts.nu);
    SimState<T> state(g, cc.u0, T(0), cfg.method);
    ScalarField<T> buf(g);
    double t_prev = 0, worst_div = 0;
    const Observer<T> obs = [&](const SimState<T>& s, long step) {
        const double dt = double(s.t) - t_prev;
        t_prev = s.t;
        const double dv = max_div(g, s.u, buf);
        worst_div = std::max(worst_div, dv);
        if (!(dv <= cfg.div_tol))
            throw NumericalFailure("divergence " + num(dv) + " exceeds channel.div_tol at step " + std::to_string(step));
        if (step % cfg.stats_every == 0) stats.add(s.u, cc.setup.closure.active() ? &s.nu_t : nullptr);
        if (step % cfg.cadence == 0) {
            const double ke = kinetic_energy(g, s.u);
            run.row({std::to_string(step), num(s.t), num(dt), num(ke), num(dv)});
            run.note("step " + std::to_string(step) + " t=" + num(s.t) + " dt=" + num(dt) + " ke=" + num(ke) +
                     " max_div=" + num(dv));
        }
    };
    StepControl<T> control;
    control.method = cfg.method;
    control.adaptive = true;
    control.c_conv = static_cast<T>(cfg.c_conv);
    control.c_diff = static_cast<T>(cfg.c_diff);
    control.dt_max = static_cast<T>(cfg.dt_max);
    control.max_steps = cfg.channel_steps;
    control.cadence = 1;
    const long steps = simulate(cc.setup, state, *solver, std::numeric_limits<T>::max(), control, {obs});

    if (stats.count() >= 2) {
        const StatProfile prof = stats.finalize();
        write_profile_csv(run.dir / "profile.csv", prof);
        run.note("statistics: " + std::to_string(prof.samples) + " snapshots, u_tau = " + num(prof.u_tau));
    } else {
        run.note("statistics: fewer than two snapshots, profile.csv not written");
    }
    if (cfg.write_snapshot) write_snapshot(run.dir / "snapshot.bin", g, state.u, state.t);
    run.note("done: " + std::to_string(steps) + " steps, t = " + num(state.t) + ", max divergence " + num(worst_div));
    return exit_ok;
}

template <typename T>
int dispatch_typed(Run& run) {
    switch (run.cfg.study) {
        case StudyKind::simulate: return simulate_study<T>(run);
        case StudyKind::channel_smoke: return channel_run<T>(run);
        default: break;
    }
    return exit_config;
}

}  // namespace

int run_study(const RunConfig& cfg, std::ostream* echo) {
    Run run{cfg, echo, fs::path(cfg.output), {}, {}};
    std::error_code ec;
    fs::create_directories(run.dir, ec);
    if (ec) {
        if (echo) *echo << "error: cannot create output directory '" << cfg.output << "': " << ec.message() << "\n";
        return exit_io;
    }
    int code = exit_ok;
    try {
        write_text_atomic(run.dir / "effective_config.ini", effective_config(cfg));
        switch (cfg.study) {
            case StudyKind::convergence: code = convergence_run(run); break;
            case StudyKind::vcurve: code = vcurve_run(run); break;
            case StudyKind::adjoint_check: code = adjoint_run(run); break;
            default:
                code = cfg.precision == Precision::f64 ? dispatch_typed<double>(run) : dispatch_typed<float>(run);
        }
    } catch (const NumericalFailure& e) {
        run.note(std::string("numerical failure: ") + e.what());
        code = exit_numerical;
    } catch (const IoError& e) {
        run.note(std::string("i/o error: ") + e.what());
        code = exit_io;
    } catch (const ConfigError& e) {
        run.note(std::string("configuration error: ") + e.what());
        code = exit_config;
    } catch (const UnsupportedConfiguration& e) {
        run.note(std::string("unsupported configuration: ") + e.what());
        code = exit_config;
    } catch (const std::invalid_argument& e) {
        run.note(std::string("invalid configuration: ") + e.what());
        code = exit_config;
    }
    try {
        if (!run.results.empty()) write_text_atomic(run.dir / "results.csv", run.results);
        write_text_atomic(run.dir / "log.txt", run.log);
    } catch (const IoError& e) {
        if (echo) *echo << "i/o error: " << e.what() << "\n";
        if (code == exit_ok) code = exit_io;
    }
    return code;
}

}  // namespace stagflow
