#include "stagflow/cases.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace stagflow {

Precision parse_precision(const std::string& name) {
    if (name == "f64" || name == "float64" || name == "double") return Precision::f64;
    if (name == "f32" || name == "float32" || name == "float") return Precision::f32;
    throw InvalidArgument("unknown precision '" + name + "' (expected f32 or f64)");
}

std::string to_string(Precision p) { return p == Precision::f64 ? "f64" : "f32"; }

template <typename T>
std::pair<VelocityField<T>, ScalarField<T>> taylor_green(const Grid<T>& g, T nu, T t) {
    if (g.dim != 2) throw UnsupportedConfiguration("taylor_green needs a 2D grid");
    const double L = 2 * std::numbers::pi;
    for (int a = 0; a < 2; ++a) {
        const auto& b = g.axes[a].boundaries;
        if (!g.periodic(a) || std::abs(double(b.front())) > 1e-6 || std::abs(double(b.back()) - L) > 1e-5)
            throw UnsupportedConfiguration("taylor_green needs the periodic square [0, 2pi]^2");
    }
    const double ev = std::exp(-2 * double(nu) * double(t));
    const double ep = ev * ev;
    VelocityField<T> u(g);
    ScalarField<T> p(g);
    sample_velocity(g, u, [&](int c, const std::array<T, 3>& x) {
        const double X = x[0], Y = x[1];
        return static_cast<T>(c == 0 ? -std::sin(X) * std::cos(Y) * ev : std::cos(X) * std::sin(Y) * ev);
    });
    sample_scalar(g, p, [&](const std::array<T, 3>& x) {
        return static_cast<T>((std::cos(2 * double(x[0])) + std::cos(2 * double(x[1]))) * ep / 4);
    });
    fill_ghosts_velocity(g, u, t);
    fill_ghosts_scalar(g, p);
    return {std::move(u), std::move(p)};
}

template <typename T>
T l2_error(const Grid<T>& g, const VelocityField<T>& a, const VelocityField<T>& b) {
    if (a.dim != g.dim || b.dim != g.dim) throw InvalidArgument("l2_error: field dimension does not match grid");
    for (int c = 0; c < g.dim; ++c)
        if (a[c].size() != g.size() || b[c].size() != g.size())
            throw InvalidArgument("l2_error: field shape does not match grid");
    double s = 0;
    for (int c = 0; c < g.dim; ++c)
        for_box(g, velocity_dofs(g, c), [&](int i, int j, int k, std::ptrdiff_t idx) {
            const double d = double(a[c][idx]) - double(b[c][idx]);
            s += double(velocity_volume(g, c, i, j, k)) * d * d;
        });
    return static_cast<T>(std::sqrt(s));
}

namespace {

template <typename T>
Grid<T> tg_grid(int n, double gamma) {
    const T L = static_cast<T>(2 * std::numbers::pi);
    auto axis = [&] { return gamma > 0 ? tanh_grid<T>(T(0), L, n, static_cast<T>(gamma)) : uniform_grid<T>(T(0), L, n); };
    return build_grid<T>({axis(), axis()}, BoundarySpec<T>::all_periodic());
}

}  // namespace

template <typename T>
ConvergenceRow taylor_green_run(int n, const ConvergenceOptions& opts, double dt_override) {
    const auto g = tg_grid<T>(n, opts.tanh_gamma);
    FlowSetup<T> setup(g, static_cast<T>(opts.nu));
    auto solver = make_poisson_solver(g, opts.solver);
    auto u0 = taylor_green(g, setup.nu, T(0)).first;
    u0 = project(g, u0, *solver).first;

    double h = 1e300;
    for (int a = 0; a < 2; ++a) h = std::min(h, double(g.min_width(a)));
    // Convective limit cfl·h with |u| <= 1, and the explicit diffusive limit.
    double dt_target = opts.cfl * h;
    if (opts.nu > 0) dt_target = std::min(dt_target, 0.85 * h * h / (4 * opts.nu));
    if (dt_override > 0) dt_target = dt_override;
    const long steps = std::max<long>(1, static_cast<long>(std::ceil(opts.t_final / dt_target - 1e-9)));
    const T dt = static_cast<T>(opts.t_final / double(steps));

    SimState<T> st(g, std::move(u0), T(0), opts.method);
    const auto tab = ButcherTableau<T>::ssp33();
    for (long s = 0; s < steps; ++s) {
        if (opts.method == RkMethod::wray3)
            wray3_step(setup, st, dt, *solver);
        else
            rk_step(setup, st, dt, tab, *solver);
    }

    // Error measured in double against the exact field on the double grid.
    const auto gd = tg_grid<double>(n, opts.tanh_gamma);
    const auto exact = taylor_green(gd, opts.nu, opts.t_final).first;
    VelocityField<double> num(gd);
    for (int c = 0; c < 2; ++c)
        for (std::size_t q = 0; q < num[c].data.size(); ++q) num[c].data[q] = double(st.u[c].data[q]);

    ConvergenceRow row;
    row.n = n;
    row.error = l2_error(gd, num, exact);
    row.dt = double(dt);
    row.steps = steps;
    return row;
}

std::vector<ConvergenceRow> convergence_study(const ConvergenceOptions& opts) {
    if (opts.ns.empty()) throw InvalidArgument("convergence_study: empty N list");
    for (std::size_t q = 0; q < opts.ns.size(); ++q) {
        const int n = opts.ns[q];
        if (n < 4 || (n & (n - 1)) != 0) throw InvalidArgument("convergence_study: N must be a power of two >= 4");
        if (q > 0 && n <= opts.ns[q - 1]) throw InvalidArgument("convergence_study: N must increase");
    }
    std::vector<ConvergenceRow> rows;
    for (int n : opts.ns) {
        auto row = opts.precision == Precision::f64 ? taylor_green_run<double>(n, opts) : taylor_green_run<float>(n, opts);
        if (!rows.empty())
            row.order = std::log(rows.back().error / row.error) / std::log(double(n) / rows.back().n);
        rows.push_back(row);
    }
    return rows;
}

namespace {

template <typename T>
VCurveRow vcurve_row(double h) {
    static constexpr double xs[] = {0.3, 0.9, 1.4, 2.2, 2.9, 3.7, 4.1, 4.8, 5.5, 6.0};
    double e1 = 0, e2 = 0;
    const T hh = static_cast<T>(h);
    for (double x0 : xs) {
        const T x = static_cast<T>(x0);
        const double exact = std::cos(double(x));
        const T d1 = (std::sin(T(x + hh)) - std::sin(x)) / hh;
        const T d2 = (std::sin(T(x + hh)) - std::sin(T(x - hh))) / (T(2) * hh);
        e1 += std::abs(double(d1) - exact);
        e2 += std::abs(double(d2) - exact);
    }
    constexpr double m = std::size(xs);
    return {h, e1 / m, e2 / m};
}

}  // namespace

std::vector<VCurveRow> fd_vcurve(const std::vector<double>& hs, Precision precision) {
    std::vector<VCurveRow> rows;
    rows.reserve(hs.size());
    for (double h : hs) {
        if (!(h > 0)) throw InvalidArgument("fd_vcurve: h must be positive");
        rows.push_back(precision == Precision::f64 ? vcurve_row<double>(h) : vcurve_row<float>(h));
    }
    return rows;
}

std::vector<double> log_spaced(double lo_exp, double hi_exp, int per_decade) {
    if (per_decade < 1 || hi_exp < lo_exp) throw InvalidArgument("log_spaced: bad range");
    const int n = static_cast<int>(std::lround((hi_exp - lo_exp) * per_decade));
    std::vector<double> hs;
    for (int q = 0; q <= n; ++q) hs.push_back(std::pow(10.0, lo_exp + double(q) / per_decade));
    return hs;
}

double vcurve_argmin(const std::vector<VCurveRow>& rows, int order) {
    if (rows.empty()) throw InvalidArgument("vcurve_argmin: empty table");
    auto err = [&](const VCurveRow& r) { return order == 1 ? r.err1 : r.err2; };
    return std::min_element(rows.begin(), rows.end(), [&](const auto& a, const auto& b) { return err(a) < err(b); })->h;
}

template <typename T>
Grid<T> channel_grid(const ChannelOptions& opts) {
    const double pi = std::numbers::pi;
    auto wall_normal = opts.gamma > 0 ? tanh_grid<T>(T(0), T(2), opts.ny, T(opts.gamma)) : uniform_grid<T>(T(0), T(2), opts.ny);
    return build_grid<T>({uniform_grid<T>(T(0), T(4 * pi), opts.nx), wall_normal,
                          uniform_grid<T>(T(0), T(4 * pi / 3), opts.nz)},
                         BoundarySpec<T>::channel());
}

template <typename T>
ChannelCase<T> channel_setup(const ChannelOptions& opts, PoissonSolver<T>* solver) {
    const double pi = std::numbers::pi;
    const double Lx = 4 * pi, Lz = 4 * pi / 3;
    const auto g = channel_grid<T>(opts);
    ChannelCase<T> cc;
    cc.setup = FlowSetup<T>(g, static_cast<T>(opts.nu));
    cc.setup.set_force({T(1), T(0), T(0)});
    if (opts.closure != ClosureKind::none) {
        cc.setup.closure = ClosureModel<T>::make(opts.closure);
        cc.setup.closure.C = static_cast<T>(channel_closure_constant(opts.closure));
    }

    struct Mode {
        int kx, kz;
        double amp, phx, phz;
    };
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<Mode> modes;
    for (int m = 0; m < opts.modes; ++m) {
        Mode md{1 + static_cast<int>(U(rng) * 4), 1 + static_cast<int>(U(rng) * 4), 0.5 + 0.5 * U(rng), 2 * pi * U(rng),
                2 * pi * U(rng)};
        modes.push_back(md);
    }
    const double A = opts.perturbation * opts.centerline;
    VelocityField<T> u(g);
    sample_velocity(g, u, [&](int c, const std::array<T, 3>& x) {
        const double X = x[0], Y = x[1], Z = x[2];
        const double wall = Y * (2 - Y);
        double v = c == 0 ? opts.centerline * wall : 0.0;
        for (const auto& md : modes) {
            const double ax = 2 * pi * md.kx * X / Lx + md.phx;
            const double az = 2 * pi * md.kz * Z / Lz + md.phz;
            if (c == 0) v += A * md.amp * wall * std::sin(ax) * std::cos(az);
            if (c == 1) v += A * md.amp * wall * wall * std::cos(ax) * std::cos(az);
            if (c == 2) v += A * md.amp * wall * std::cos(ax) * std::sin(az);
        }
        return static_cast<T>(v);
    });
    zero_non_dofs(g, u);
    fill_ghosts_velocity(g, u, T(0));
    std::unique_ptr<PoissonSolver<T>> own;
    if (!solver) {
        own = make_poisson_solver(g, opts.solver);
        solver = own.get();
    }
    cc.u0 = project(g, u, *solver).first;
    return cc;
}

#define STAGFLOW_INSTANTIATE(T)                                                                                      \
    template std::pair<VelocityField<T>, ScalarField<T>> taylor_green<T>(const Grid<T>&, T, T);                     \
    template T l2_error<T>(const Grid<T>&, const VelocityField<T>&, const VelocityField<T>&);                       \
    template ConvergenceRow taylor_green_run<T>(int, const ConvergenceOptions&, double);                            \
    template Grid<T> channel_grid<T>(const ChannelOptions&);                                                        \
    template ChannelCase<T> channel_setup<T>(const ChannelOptions&, PoissonSolver<T>*);

STAGFLOW_INSTANTIATE(float)
STAGFLOW_INSTANTIATE(double)

}  // namespace stagflow
