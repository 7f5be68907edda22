#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "stagflow/errors.hpp"

namespace stagflow {

/// 1D coordinate profile: N volumes bounded by N+1 increasing coordinates.
template <typename T>
struct AxisCoords {
    std::vector<T> boundaries;  // x_0 .. x_N
    std::vector<T> widths;      // N entries
    std::vector<T> centers;     // N entries
    bool uniform = false;

    int size() const { return static_cast<int>(widths.size()); }
    T a() const { return boundaries.front(); }
    T b() const { return boundaries.back(); }
    T length() const { return boundaries.back() - boundaries.front(); }
};

template <typename T> AxisCoords<T> uniform_grid(T a, T b, int n);
template <typename T> AxisCoords<T> cosine_grid(T a, T b, int n);
template <typename T> AxisCoords<T> tanh_grid(T a, T b, int n, T gamma);
template <typename T> AxisCoords<T> stretched_grid(T a, T b, int n, T s);

// Builds widths/centers from boundaries; checks strict monotonicity.
template <typename T> AxisCoords<T> axis_from_boundaries(std::vector<T> boundaries);

//------------------------------------------------------------------------------
// Boundary conditions
//------------------------------------------------------------------------------

enum class BcKind { periodic, dirichlet, symmetric };

// Boundary velocity as a function of (position, time); returns all components.
template <typename T>
using BoundaryValue = std::function<std::array<T, 3>(const std::array<T, 3>&, T)>;

template <typename T>
struct BoundarySide {
    BcKind kind = BcKind::periodic;
    BoundaryValue<T> value;  // dirichlet only; empty means no-slip

    static BoundarySide periodic() { return {BcKind::periodic, {}}; }
    static BoundarySide symmetric() { return {BcKind::symmetric, {}}; }
    static BoundarySide noslip() { return {BcKind::dirichlet, {}}; }
    static BoundarySide dirichlet(BoundaryValue<T> f) { return {BcKind::dirichlet, std::move(f)}; }
    static BoundarySide dirichlet_constant(std::array<T, 3> v) {
        return {BcKind::dirichlet, [v](const std::array<T, 3>&, T) { return v; }};
    }
};

template <typename T>
struct BoundarySpec {
    // sides[axis][0] is the low side, sides[axis][1] the high side.
    std::array<std::array<BoundarySide<T>, 2>, 3> sides;

    static BoundarySpec all_periodic() { return BoundarySpec{}; }
    // Periodic in x and z, no-slip walls in y.
    static BoundarySpec channel() {
        BoundarySpec s;
        s.sides[1][0] = BoundarySide<T>::noslip();
        s.sides[1][1] = BoundarySide<T>::noslip();
        return s;
    }

    bool periodic(int axis) const { return sides[axis][0].kind == BcKind::periodic; }
    void validate(int dim) const;
};

//------------------------------------------------------------------------------
// Grid
//
// Storage convention, per active axis with N volumes (extent N+2):
//   pressure index j = 1..N is volume j-1; j = 0 and j = N+1 are ghosts.
//   velocity component a, index j along axis a, sits on the face between
//   storage volumes j and j+1 (face x_j); along other axes it sits at centers.
// An inactive third axis (2D) has extent 1, index 0, width 1.
// Arrays are flat with axis 0 fastest.
//------------------------------------------------------------------------------

template <typename T>
struct Grid {
    int dim = 0;
    std::array<int, 3> n{1, 1, 1};        // interior volumes
    std::array<int, 3> ext{1, 1, 1};      // storage extent
    std::array<int, 3> lo{0, 0, 0};       // first interior storage index
    std::array<std::ptrdiff_t, 3> stride{0, 0, 0};
    std::array<AxisCoords<T>, 3> axes;
    BoundarySpec<T> bc;

    // Per axis, indexed by storage position 0..ext-1.
    std::array<std::vector<T>, 3> width;   // volume width, ghosts mirrored
    std::array<std::vector<T>, 3> dual;    // distance center(j) -> center(j+1)
    std::array<std::vector<T>, 3> center;  // center coordinate
    std::array<std::vector<T>, 3> face;    // coordinate of the face right of volume j

    // Advecting-velocity interpolation weights along axis a:
    // wplus[a][j] = w_j/(w_j+w_{j+1}), wminus[a][j+1] = w_{j+1}/(w_j+w_{j+1}).
    std::array<std::vector<T>, 3> wplus;
    std::array<std::vector<T>, 3> wminus;

    std::size_t size() const { return static_cast<std::size_t>(ext[0]) * ext[1] * ext[2]; }
    std::ptrdiff_t index(int i, int j, int k) const { return i + stride[1] * j + stride[2] * k; }
    bool periodic(int axis) const { return bc.periodic(axis); }
    bool uniform(int axis) const { return axes[axis].uniform; }
    bool all_periodic() const;
    bool all_uniform() const;

    // Interior pressure volume measure and the total domain measure.
    T cell_volume(int i, int j, int k) const { return width[0][i] * width[1][j] * width[2][k]; }
    T domain_volume() const;
    // Smallest interior width along an axis.
    T min_width(int axis) const;
};

template <typename T>
Grid<T> build_grid(const std::vector<AxisCoords<T>>& axes, const BoundarySpec<T>& bcs);

}  // namespace stagflow
