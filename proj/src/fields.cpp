#include "stagflow/fields.hpp"

namespace stagflow {

namespace {

// Calls f(base_flat, i, j, k) for each line along axis a (position 0 on that axis).
template <typename T, typename F>
void for_lines(const Grid<T>& g, int a, F&& f) {
    Box b = full_box(g);
    b.hi[a] = 1;
    for_box(g, b, [&](int i, int j, int k, std::ptrdiff_t idx) { f(idx, i, j, k); });
}

template <typename T>
T bc_component(const BoundarySide<T>& side, int c, const std::array<T, 3>& x, T t) {
    if (!side.value) return T(0);
    return side.value(x, t)[c];
}

}  // namespace

template <typename T>
void fill_ghosts_scalar(const Grid<T>& g, ScalarField<T>& f) {
    for (int a = 0; a < g.dim; ++a) {
        const int n = g.n[a];
        const std::ptrdiff_t s = g.stride[a];
        const bool per = g.periodic(a);
        for_lines(g, a, [&](std::ptrdiff_t b, int, int, int) {
            if (per) {
                f[b] = f[b + n * s];
                f[b + (n + 1) * s] = f[b + s];
            } else {
                f[b] = f[b + s];
                f[b + (n + 1) * s] = f[b + n * s];
            }
        });
    }
}

template <typename T>
void fill_ghosts_velocity(const Grid<T>& g, VelocityField<T>& u, T t) {
    for (int a = 0; a < g.dim; ++a) {
        const int n = g.n[a];
        const std::ptrdiff_t s = g.stride[a];
        const auto& lo_side = g.bc.sides[a][0];
        const auto& hi_side = g.bc.sides[a][1];
        for (int c = 0; c < g.dim; ++c) {
            ScalarField<T>& f = u[c];
            for_lines(g, a, [&](std::ptrdiff_t b, int i, int j, int k) {
                if (lo_side.kind == BcKind::periodic) {
                    f[b] = f[b + n * s];
                    f[b + (n + 1) * s] = f[b + s];
                    return;
                }
                std::array<int, 3> ix{i, j, k};
                // Low side.
                if (lo_side.kind == BcKind::dirichlet) {
                    ix[a] = 0;
                    auto x = point_coords(g, c, ix[0], ix[1], ix[2]);
                    x[a] = g.face[a][0];
                    const T v = bc_component(lo_side, c, x, t);
                    f[b] = (c == a) ? v : T(2) * v - f[b + s];
                } else {
                    f[b] = (c == a) ? T(0) : f[b + s];
                }
                // High side.
                if (hi_side.kind == BcKind::dirichlet) {
                    ix[a] = n;
                    auto x = point_coords(g, c, ix[0], ix[1], ix[2]);
                    x[a] = g.face[a][n];
                    const T v = bc_component(hi_side, c, x, t);
                    if (c == a) {
                        f[b + n * s] = v;
                        f[b + (n + 1) * s] = v;
                    } else {
                        f[b + (n + 1) * s] = T(2) * v - f[b + n * s];
                    }
                } else {
                    if (c == a) {
                        f[b + n * s] = T(0);
                        f[b + (n + 1) * s] = (n >= 2) ? -f[b + (n - 1) * s] : T(0);
                    } else {
                        f[b + (n + 1) * s] = f[b + n * s];
                    }
                }
            });
        }
    }
}

template <typename T>
void interpolate_to_centers(const Grid<T>& g, const VelocityField<T>& u, std::array<ScalarField<T>, 3>& out) {
    for (int c = 0; c < g.dim; ++c) {
        if (out[c].ext != g.ext || out[c].size() != g.size()) out[c] = ScalarField<T>(g);
        out[c].fill(T(0));
        const std::ptrdiff_t s = g.stride[c];
        const auto& f = u[c];
        // A centre sits midway between its two faces on any axis.
        for_box(g, pressure_dofs(g),
                [&](int, int, int, std::ptrdiff_t idx) { out[c][idx] = (f[idx - s] + f[idx]) / T(2); });
    }
}

template <typename T>
std::array<ScalarField<T>, 3> interpolate_to_centers(const Grid<T>& g, const VelocityField<T>& u) {
    std::array<ScalarField<T>, 3> out;
    interpolate_to_centers(g, u, out);
    return out;
}

template <typename T>
void zero_non_dofs(const Grid<T>& g, VelocityField<T>& u) {
    for (int c = 0; c < g.dim; ++c) {
        const Box d = velocity_dofs(g, c);
        for_box(g, full_box(g), [&](int i, int j, int k, std::ptrdiff_t idx) {
            if (!d.contains(i, j, k)) u[c][idx] = T(0);
        });
    }
}

template <typename T>
void zero_non_dofs(const Grid<T>& g, ScalarField<T>& p) {
    const Box d = pressure_dofs(g);
    for_box(g, full_box(g), [&](int i, int j, int k, std::ptrdiff_t idx) {
        if (!d.contains(i, j, k)) p[idx] = T(0);
    });
}

#define STAGFLOW_INSTANTIATE(T)                                                                          \
    template void fill_ghosts_scalar<T>(const Grid<T>&, ScalarField<T>&);                               \
    template void fill_ghosts_velocity<T>(const Grid<T>&, VelocityField<T>&, T);                        \
    template std::array<ScalarField<T>, 3> interpolate_to_centers<T>(const Grid<T>&, const VelocityField<T>&); \
    template void interpolate_to_centers<T>(const Grid<T>&, const VelocityField<T>&,                    \
                                            std::array<ScalarField<T>, 3>&);                            \
    template void zero_non_dofs<T>(const Grid<T>&, VelocityField<T>&);                                  \
    template void zero_non_dofs<T>(const Grid<T>&, ScalarField<T>&);

STAGFLOW_INSTANTIATE(float)
STAGFLOW_INSTANTIATE(double)

}  // namespace stagflow
