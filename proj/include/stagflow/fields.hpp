#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

#include "stagflow/grid.hpp"

namespace stagflow {

/// Pressure-point array including ghosts.
template <typename T>
struct ScalarField {
    std::array<int, 3> ext{1, 1, 1};
    std::vector<T> data;

    ScalarField() = default;
    explicit ScalarField(const Grid<T>& g) : ext(g.ext), data(g.size(), T(0)) {}

    T& operator[](std::ptrdiff_t i) { return data[i]; }
    const T& operator[](std::ptrdiff_t i) const { return data[i]; }
    T& at(int i, int j, int k) { return data[i + ext[0] * (j + static_cast<std::ptrdiff_t>(ext[1]) * k)]; }
    const T& at(int i, int j, int k) const {
        return data[i + ext[0] * (j + static_cast<std::ptrdiff_t>(ext[1]) * k)];
    }
    std::size_t size() const { return data.size(); }
    void fill(T v) { std::fill(data.begin(), data.end(), v); }
    bool same_shape(const ScalarField& o) const { return ext == o.ext; }
};

/// d staggered components; component a lives on faces normal to axis a.
template <typename T>
struct VelocityField {
    int dim = 0;
    std::array<ScalarField<T>, 3> comp;

    VelocityField() = default;
    explicit VelocityField(const Grid<T>& g) : dim(g.dim) {
        for (int a = 0; a < dim; ++a) comp[a] = ScalarField<T>(g);
    }

    ScalarField<T>& operator[](int a) { return comp[a]; }
    const ScalarField<T>& operator[](int a) const { return comp[a]; }
    void fill(T v) {
        for (int a = 0; a < dim; ++a) comp[a].fill(v);
    }
    bool same_shape(const VelocityField& o) const {
        if (dim != o.dim) return false;
        for (int a = 0; a < dim; ++a)
            if (!comp[a].same_shape(o.comp[a])) return false;
        return true;
    }
};

/// Half-open index box [lo, hi) over storage positions.
struct Box {
    std::array<int, 3> lo{0, 0, 0};
    std::array<int, 3> hi{1, 1, 1};

    bool empty() const { return hi[0] <= lo[0] || hi[1] <= lo[1] || hi[2] <= lo[2]; }
    bool contains(int i, int j, int k) const {
        return i >= lo[0] && i < hi[0] && j >= lo[1] && j < hi[1] && k >= lo[2] && k < hi[2];
    }
};

// Calls f(i, j, k, flat) over the box, axis 0 fastest.
template <typename T, typename F>
inline void for_box(const Grid<T>& g, const Box& b, F&& f) {
    for (int k = b.lo[2]; k < b.hi[2]; ++k)
        for (int j = b.lo[1]; j < b.hi[1]; ++j) {
            std::ptrdiff_t idx = g.index(b.lo[0], j, k);
            for (int i = b.lo[0]; i < b.hi[0]; ++i, ++idx) f(i, j, k, idx);
        }
}

/// Interior pressure points.
template <typename T>
Box pressure_dofs(const Grid<T>& g) {
    Box b;
    for (int a = 0; a < 3; ++a) {
        b.lo[a] = g.lo[a];
        b.hi[a] = g.lo[a] + g.n[a];
    }
    return b;
}

/// Degrees of freedom of velocity component c: wall-normal boundary faces excluded.
template <typename T>
Box velocity_dofs(const Grid<T>& g, int c) {
    Box b = pressure_dofs(g);
    if (!g.periodic(c)) b.hi[c] -= 1;
    return b;
}

/// Whole storage extent.
template <typename T>
Box full_box(const Grid<T>& g) {
    return Box{{0, 0, 0}, g.ext};
}

/// Coordinates of storage point (i,j,k) for component c (c < 0: pressure point).
template <typename T>
std::array<T, 3> point_coords(const Grid<T>& g, int c, int i, int j, int k) {
    const std::array<int, 3> ix{i, j, k};
    std::array<T, 3> x{T(0), T(0), T(0)};
    for (int a = 0; a < g.dim; ++a) x[a] = (a == c) ? g.face[a][ix[a]] : g.center[a][ix[a]];
    return x;
}

template <typename T> void fill_ghosts_scalar(const Grid<T>& g, ScalarField<T>& f);
template <typename T> void fill_ghosts_velocity(const Grid<T>& g, VelocityField<T>& u, T t);

/// Component-wise centre values; ghosts of the result are zero.
template <typename T>
std::array<ScalarField<T>, 3> interpolate_to_centers(const Grid<T>& g, const VelocityField<T>& u);
template <typename T>
void interpolate_to_centers(const Grid<T>& g, const VelocityField<T>& u, std::array<ScalarField<T>, 3>& out);

// Volume measure of velocity point (i,j,k) of component c.
template <typename T>
inline T velocity_volume(const Grid<T>& g, int c, int i, int j, int k) {
    const std::array<int, 3> ix{i, j, k};
    T v = 1;
    for (int a = 0; a < g.dim; ++a) v *= (a == c) ? g.dual[a][ix[a]] : g.width[a][ix[a]];
    return v;
}

// Sampling helpers: evaluate fn(x) at every storage point (ghosts included).
template <typename T, typename F>
void sample_scalar(const Grid<T>& g, ScalarField<T>& f, F&& fn) {
    for_box(g, full_box(g), [&](int i, int j, int k, std::ptrdiff_t idx) { f[idx] = fn(point_coords(g, -1, i, j, k)); });
}

// fn(c, x) gives component c at position x.
template <typename T, typename F>
void sample_velocity(const Grid<T>& g, VelocityField<T>& u, F&& fn) {
    for (int c = 0; c < g.dim; ++c)
        for_box(g, full_box(g),
                [&](int i, int j, int k, std::ptrdiff_t idx) { u[c][idx] = fn(c, point_coords(g, c, i, j, k)); });
}

// Zero every non-DOF entry (ghosts and wall faces).
template <typename T> void zero_non_dofs(const Grid<T>& g, VelocityField<T>& u);
template <typename T> void zero_non_dofs(const Grid<T>& g, ScalarField<T>& p);

}  // namespace stagflow
