#include "stagflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace stagflow {

namespace {

void check_interval(double a, double b, int n) {
    if (n < 1) throw InvalidArgument("grid: N must be >= 1, got " + std::to_string(n));
    if (!(a < b)) throw InvalidArgument("grid: require a < b");
}

// Profiles are evaluated in double and rounded once; endpoints are pinned.
template <typename T, typename F>
AxisCoords<T> make_profile(T a, T b, int n, F&& x_of_i) {
    std::vector<T> xs(n + 1);
    for (int i = 0; i <= n; ++i) xs[i] = static_cast<T>(x_of_i(i));
    xs.front() = a;
    xs.back() = b;
    return axis_from_boundaries(std::move(xs));
}

}  // namespace

template <typename T>
AxisCoords<T> axis_from_boundaries(std::vector<T> boundaries) {
    if (boundaries.size() < 2) throw InvalidArgument("grid: need at least two boundaries");
    AxisCoords<T> ax;
    const int n = static_cast<int>(boundaries.size()) - 1;
    ax.widths.resize(n);
    ax.centers.resize(n);
    for (int i = 0; i < n; ++i) {
        if (!(boundaries[i + 1] > boundaries[i]))
            throw InvalidArgument("grid: boundaries must be strictly increasing");
        ax.widths[i] = boundaries[i + 1] - boundaries[i];
        ax.centers[i] = (boundaries[i] + boundaries[i + 1]) / T(2);
    }
    ax.boundaries = std::move(boundaries);
    return ax;
}

template <typename T>
AxisCoords<T> uniform_grid(T a, T b, int n) {
    check_interval(a, b, n);
    const double da = a, db = b;
    auto ax = make_profile<T>(a, b, n, [&](int i) { return da + (db - da) * i / n; });
    // Equal widths exactly, so every consumer sees one spacing.
    const T h = static_cast<T>((db - da) / n);
    std::fill(ax.widths.begin(), ax.widths.end(), h);
    ax.uniform = true;
    return ax;
}

template <typename T>
AxisCoords<T> cosine_grid(T a, T b, int n) {
    check_interval(a, b, n);
    const double da = a, db = b;
    return make_profile<T>(a, b, n, [&](int i) {
        return da + (1.0 - std::cos(std::numbers::pi * i / n)) / 2.0 * (db - da);
    });
}

template <typename T>
AxisCoords<T> tanh_grid(T a, T b, int n, T gamma) {
    check_interval(a, b, n);
    if (!(gamma > 0)) throw InvalidArgument("tanh_grid: gamma must be > 0");
    const double da = a, db = b, g = gamma;
    const double mid = (da + db) / 2, half = (db - da) / 2, tg = std::tanh(g);
    // (2i - N)/N is exactly antisymmetric in i -> N - i, and so is tanh.
    return make_profile<T>(a, b, n, [&](int i) {
        const double s = static_cast<double>(2 * i - n) / n;
        return mid + half * (std::tanh(g * s) / tg);
    });
}

template <typename T>
AxisCoords<T> stretched_grid(T a, T b, int n, T s) {
    check_interval(a, b, n);
    if (!(s > 0)) throw InvalidArgument("stretched_grid: s must be > 0");
    if (s == T(1)) return uniform_grid(a, b, n);
    const double da = a, db = b, ds = s;
    const double denom = 1.0 - std::pow(ds, n);
    return make_profile<T>(a, b, n, [&](int i) { return da + (db - da) * (1.0 - std::pow(ds, i)) / denom; });
}

template <typename T>
void BoundarySpec<T>::validate(int dim) const {
    for (int a = 0; a < dim; ++a) {
        const bool p0 = sides[a][0].kind == BcKind::periodic;
        const bool p1 = sides[a][1].kind == BcKind::periodic;
        if (p0 != p1)
            throw InvalidArgument("boundary: axis " + std::to_string(a) +
                                  " must be periodic on both sides or neither");
    }
}

template <typename T>
bool Grid<T>::all_periodic() const {
    for (int a = 0; a < dim; ++a)
        if (!periodic(a)) return false;
    return true;
}

template <typename T>
bool Grid<T>::all_uniform() const {
    for (int a = 0; a < dim; ++a)
        if (!uniform(a)) return false;
    return true;
}

template <typename T>
T Grid<T>::domain_volume() const {
    T v = 1;
    for (int a = 0; a < dim; ++a) v *= axes[a].length();
    return v;
}

template <typename T>
T Grid<T>::min_width(int axis) const {
    return *std::min_element(axes[axis].widths.begin(), axes[axis].widths.end());
}

template <typename T>
Grid<T> build_grid(const std::vector<AxisCoords<T>>& axes, const BoundarySpec<T>& bcs) {
    const int dim = static_cast<int>(axes.size());
    if (dim < 2 || dim > 3)
        throw UnsupportedDimension("build_grid: dimension must be 2 or 3, got " + std::to_string(dim));
    bcs.validate(dim);

    Grid<T> g;
    g.dim = dim;
    g.bc = bcs;
    for (int a = 0; a < 3; ++a) {
        if (a >= dim) {
            g.axes[a] = axis_from_boundaries<T>({T(0), T(1)});
            g.axes[a].uniform = true;
            g.width[a] = {T(1)};
            g.dual[a] = {T(1)};
            g.center[a] = {T(0)};
            g.face[a] = {T(0)};
            g.wplus[a] = {T(0.5)};
            g.wminus[a] = {T(0.5)};
            continue;
        }
        const auto& ax = axes[a];
        const int n = ax.size();
        const bool per = bcs.periodic(a);
        g.axes[a] = ax;
        g.n[a] = n;
        g.ext[a] = n + 2;
        g.lo[a] = 1;

        // Widths at storage 0..n+1, plus one virtual entry n+2 for the dual of n+1.
        std::vector<T> w(n + 3);
        for (int i = 0; i < n; ++i) w[i + 1] = ax.widths[i];
        if (per) {
            w[0] = ax.widths[n - 1];
            w[n + 1] = ax.widths[0];
            w[n + 2] = ax.widths[std::min(1, n - 1)];
        } else {
            w[0] = ax.widths[0];
            w[n + 1] = ax.widths[n - 1];
            w[n + 2] = ax.widths[std::max(0, n - 2)];
        }
        g.width[a].assign(w.begin(), w.begin() + n + 2);
        g.dual[a].resize(n + 2);
        g.wplus[a].resize(n + 2);
        g.wminus[a].resize(n + 2);
        for (int j = 0; j < n + 2; ++j) {
            g.dual[a][j] = (w[j] + w[j + 1]) / T(2);
            g.wplus[a][j] = w[j] / (w[j] + w[j + 1]);
        }
        g.wminus[a][0] = T(0.5);
        for (int j = 1; j < n + 2; ++j) g.wminus[a][j] = w[j] / (w[j - 1] + w[j]);

        g.face[a].resize(n + 2);
        g.center[a].resize(n + 2);
        for (int j = 0; j <= n; ++j) g.face[a][j] = ax.boundaries[j];
        g.face[a][n + 1] = ax.boundaries[n] + w[n + 1];
        g.center[a][0] = ax.boundaries[0] - w[0] / T(2);
        for (int j = 1; j <= n; ++j) g.center[a][j] = ax.centers[j - 1];
        g.center[a][n + 1] = ax.boundaries[n] + w[n + 1] / T(2);
    }
    g.stride = {1, g.ext[0], static_cast<std::ptrdiff_t>(g.ext[0]) * g.ext[1]};
    return g;
}

#define STAGFLOW_INSTANTIATE(T)                                                   \
    template AxisCoords<T> axis_from_boundaries<T>(std::vector<T>);              \
    template AxisCoords<T> uniform_grid<T>(T, T, int);                           \
    template AxisCoords<T> cosine_grid<T>(T, T, int);                            \
    template AxisCoords<T> tanh_grid<T>(T, T, int, T);                           \
    template AxisCoords<T> stretched_grid<T>(T, T, int, T);                      \
    template struct BoundarySpec<T>;                                             \
    template struct Grid<T>;                                                     \
    template Grid<T> build_grid<T>(const std::vector<AxisCoords<T>>&, const BoundarySpec<T>&);

STAGFLOW_INSTANTIATE(float)
STAGFLOW_INSTANTIATE(double)

}  // namespace stagflow
