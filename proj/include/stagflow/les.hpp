#pragma once

#include <array>
#include <string>
#include <vector>

#include "stagflow/fields.hpp"

namespace stagflow {

template <typename T>
using Mat3 = std::array<std::array<T, 3>, 3>;

enum class ClosureKind { none, smagorinsky, vreman, qr, wale, sigma, s3pqr };

// Filter width: geometric mean of the local widths. Vreman additionally
// takes per-axis widths unless the rule is geometric_mean.
enum class FilterRule { per_axis, geometric_mean };

ClosureKind parse_closure_kind(const std::string& name);
std::string to_string(ClosureKind kind);
double default_closure_constant(ClosureKind kind);
// Constants used for the channel study.
double channel_closure_constant(ClosureKind kind);

template <typename T>
struct ClosureModel {
    ClosureKind kind = ClosureKind::none;
    T C = T(0);
    T p = T(-2.5);  // s3pqr exponent
    FilterRule filter = FilterRule::per_axis;

    static ClosureModel make(ClosureKind kind) {
        ClosureModel m;
        m.kind = kind;
        m.C = static_cast<T>(default_closure_constant(kind));
        return m;
    }
    bool active() const { return kind != ClosureKind::none; }
};

template <typename T>
struct Invariants {
    T Q_A = 0, Q_S = 0, Q_W = 0, R_S = 0, R_A = 0, V2 = 0, P_AA = 0, Q_AA = 0, R_AA = 0;
};

// Tensors are 3x3; 2D gradients occupy the upper-left block with zeros elsewhere.
template <typename T> Invariants<T> invariants(const Mat3<T>& A, int dim);

template <typename T> T nut_smagorinsky(const Mat3<T>& A, T C, T delta);
template <typename T> T nut_vreman(const Mat3<T>& A, T C, const std::array<T, 3>& delta_axes, int dim);
template <typename T> T nut_qr(const Mat3<T>& A, T C, T delta, int dim);
template <typename T> T nut_wale(const Mat3<T>& A, T C, T delta);
template <typename T> T nut_sigma(const Mat3<T>& A, T C, T delta);
template <typename T> T nut_s3pqr(const Mat3<T>& A, T C, T delta, T p, int dim);

/// Singular values of A, descending.
template <typename T> std::array<T, 3> singular_values(const Mat3<T>& A);

/// ν_t for one tensor; delta_axes are the local widths per axis.
template <typename T>
T eddy_viscosity_point(const ClosureModel<T>& m, const Mat3<T>& A, const std::array<T, 3>& delta_axes, int dim);

/// Velocity gradient at interior pressure point (i,j,k); u ghost-filled.
template <typename T> Mat3<T> velocity_gradient_at(const Grid<T>& g, const VelocityField<T>& u, int i, int j, int k);

template <typename T>
struct GradientTensorField {
    std::vector<Mat3<T>> A;  // one per storage point; ghosts zero
};
template <typename T> GradientTensorField<T> gradient_at_centers(const Grid<T>& g, const VelocityField<T>& u);

/// ν_t at interior pressure points, ghosts filled (periodic wrap or copy).
template <typename T>
void eddy_viscosity(const Grid<T>& g, const VelocityField<T>& u, const ClosureModel<T>& m, ScalarField<T>& nu_t);

/// Right-hand-side contribution Σ_β δ_β(2 ν_t S_αβ); dissipative for ν_t ≥ 0.
template <typename T>
void eddy_stress_divergence(const Grid<T>& g, const VelocityField<T>& u, const ScalarField<T>& nu_t,
                            VelocityField<T>& out);
template <typename T>
VelocityField<T> eddy_stress_divergence(const Grid<T>& g, const VelocityField<T>& u, const ScalarField<T>& nu_t);
template <typename T>
void eddy_stress_divergence_add(const Grid<T>& g, const VelocityField<T>& u, const ScalarField<T>& nu_t,
                                VelocityField<T>& out);

}  // namespace stagflow
