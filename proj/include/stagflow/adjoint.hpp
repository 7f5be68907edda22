#pragma once

#include <functional>

#include "stagflow/timestep.hpp"

namespace stagflow {

// Pullbacks (vector-Jacobian products) of the forward kernels, including the
// periodic ghost fill of their inputs. Outputs are nonzero only on degrees of
// freedom. Periodic grids only; anything else throws UnsupportedConfiguration.

template <typename T> void divergence_pullback(const Grid<T>& g, const ScalarField<T>& phibar, VelocityField<T>& out);
template <typename T> VelocityField<T> divergence_pullback(const Grid<T>& g, const ScalarField<T>& phibar);

template <typename T>
void pressure_gradient_pullback(const Grid<T>& g, const VelocityField<T>& phibar, ScalarField<T>& out);
template <typename T> ScalarField<T> pressure_gradient_pullback(const Grid<T>& g, const VelocityField<T>& phibar);

template <typename T>
void diffusion_pullback(const Grid<T>& g, const VelocityField<T>& phibar, T nu, VelocityField<T>& out);
template <typename T> VelocityField<T> diffusion_pullback(const Grid<T>& g, const VelocityField<T>& phibar, T nu);

/// u is the ghost-filled primal state at which convection was evaluated.
template <typename T>
void convection_pullback(const Grid<T>& g, const VelocityField<T>& phibar, const VelocityField<T>& u,
                         VelocityField<T>& out);
template <typename T>
VelocityField<T> convection_pullback(const Grid<T>& g, const VelocityField<T>& phibar, const VelocityField<T>& u);

/// Transpose of the Poisson solve map r -> p.
template <typename T>
void poisson_pullback(const Grid<T>& g, const ScalarField<T>& pbar, PoissonSolver<T>& solver, ScalarField<T>& out);
template <typename T>
ScalarField<T> poisson_pullback(const Grid<T>& g, const ScalarField<T>& pbar, PoissonSolver<T>& solver);

/// Transpose of the velocity projection u -> u - G solve(D u).
template <typename T>
VelocityField<T> projection_pullback(const Grid<T>& g, const VelocityField<T>& ubar, PoissonSolver<T>& solver);

/// Transpose of momentum_rhs linearised at u (closure not supported).
template <typename T>
VelocityField<T> momentum_rhs_pullback(const Grid<T>& g, const VelocityField<T>& kbar, const VelocityField<T>& u,
                                       const MomentumTerms<T>& terms);

/// Scalar loss of the final velocity; writes d(loss)/du over degrees of freedom into grad.
template <typename T>
using LossFunction = std::function<T(const Grid<T>&, const VelocityField<T>&, VelocityField<T>& grad)>;

template <typename T> LossFunction<T> kinetic_energy_loss();
/// loss = sum over degrees of freedom of c * u.
template <typename T> LossFunction<T> linear_loss(VelocityField<T> c);

/// Gradient of loss(u after n_steps fixed steps) with respect to the degrees of freedom of u0.
template <typename T>
VelocityField<T> unrolled_gradient(const FlowSetup<T>& setup, PoissonSolver<T>& solver, const ButcherTableau<T>& tab,
                                   const VelocityField<T>& u0, int n_steps, T dt, const LossFunction<T>& loss,
                                   T* loss_value = nullptr);

/// Forward-only evaluation of the same loss (finite-difference checks).
template <typename T>
T unrolled_loss(const FlowSetup<T>& setup, PoissonSolver<T>& solver, const ButcherTableau<T>& tab,
                const VelocityField<T>& u0, int n_steps, T dt, const LossFunction<T>& loss);

}  // namespace stagflow
