#pragma once

#include "stagflow/fields.hpp"

namespace stagflow {

template <typename T> struct ClosureModel;

// Every operator reads ghost-filled inputs and writes only degrees of freedom;
// all other output entries are zero. In-place variants overwrite `out`.

template <typename T> void divergence(const Grid<T>& g, const VelocityField<T>& u, ScalarField<T>& out);
template <typename T> ScalarField<T> divergence(const Grid<T>& g, const VelocityField<T>& u);

template <typename T> void pressure_gradient(const Grid<T>& g, const ScalarField<T>& p, VelocityField<T>& out);
template <typename T> VelocityField<T> pressure_gradient(const Grid<T>& g, const ScalarField<T>& p);

template <typename T> void diffusion(const Grid<T>& g, const VelocityField<T>& u, T nu, VelocityField<T>& out);
template <typename T> VelocityField<T> diffusion(const Grid<T>& g, const VelocityField<T>& u, T nu);

/// Skew-symmetric convection; returns the right-hand-side contribution (leading minus included).
template <typename T> void convection(const Grid<T>& g, const VelocityField<T>& u, VelocityField<T>& out);
template <typename T> VelocityField<T> convection(const Grid<T>& g, const VelocityField<T>& u);

// Accumulating forms: out += op(u).
template <typename T> void diffusion_add(const Grid<T>& g, const VelocityField<T>& u, T nu, VelocityField<T>& out);
template <typename T> void convection_add(const Grid<T>& g, const VelocityField<T>& u, VelocityField<T>& out);

/// Pressure Laplacian D(G p), G vanishing on wall faces; p ghosts must be filled.
template <typename T> void laplacian(const Grid<T>& g, const ScalarField<T>& p, ScalarField<T>& out);

/// ½ Σ |Ω| u² over velocity degrees of freedom.
template <typename T> T kinetic_energy(const Grid<T>& g, const VelocityField<T>& u);
/// Σ |Ω| u·v over velocity degrees of freedom.
template <typename T> T inner_w(const Grid<T>& g, const VelocityField<T>& u, const VelocityField<T>& v);
/// Σ |Ω| p q over interior pressure points.
template <typename T> T inner_w(const Grid<T>& g, const ScalarField<T>& p, const ScalarField<T>& q);
/// Volume-weighted mean over interior pressure points.
template <typename T> T mean_w(const Grid<T>& g, const ScalarField<T>& p);
template <typename T> T max_abs_interior(const Grid<T>& g, const ScalarField<T>& p);

/// Right-hand side terms other than the pressure gradient.
template <typename T>
struct MomentumTerms {
    T nu = 0;
    bool convection = true;
    const VelocityField<T>* force = nullptr;   // sampled at velocity points
    const ClosureModel<T>* closure = nullptr;  // nullptr or kind none: no eddy viscosity
};

/// out = convection + diffusion + force (+ eddy stress divergence); u must be ghost-filled.
/// nu_t is a scalar work buffer; it receives the eddy viscosity when a closure is active.
template <typename T>
void momentum_rhs(const Grid<T>& g, const VelocityField<T>& u, const MomentumTerms<T>& terms,
                  VelocityField<T>& out, ScalarField<T>& nu_t);
template <typename T>
VelocityField<T> momentum_rhs(const Grid<T>& g, const VelocityField<T>& u, const MomentumTerms<T>& terms);

}  // namespace stagflow
