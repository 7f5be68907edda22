#pragma once

#include <complex>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "stagflow/fields.hpp"

namespace stagflow {

enum class PoissonKind { spectral, direct, cg };

PoissonKind parse_poisson_kind(const std::string& name);
std::string to_string(PoissonKind kind);

//------------------------------------------------------------------------------
// Real-to-complex transform over a 2D/3D box (unnormalized inverse).
//------------------------------------------------------------------------------

template <typename T>
class RealFft {
public:
    virtual ~RealFft() = default;
    // Real buffer: n0*n1*n2 values, axis 0 fastest.
    virtual T* real_data() = 0;
    // Complex buffer: (n0/2+1)*n1*n2 values, axis 0 fastest.
    virtual std::complex<T>* complex_data() = 0;
    virtual void forward() = 0;
    virtual void inverse() = 0;  // clobbers the complex buffer
};

template <typename T>
std::unique_ptr<RealFft<T>> make_real_fft(const std::array<int, 3>& n, int dim);

//------------------------------------------------------------------------------
// Solvers for D G p = r - mean_W(r); the result has zero volume-weighted mean
// and filled ghosts.
//------------------------------------------------------------------------------

struct PoissonOptions {
    double tol = 0;    // cg; 0 selects 1e-10 (double) or 1e-5 (float)
    int max_iter = 0;  // cg; 0 selects 10 * (points)^(1/d), capped at 10000
};

template <typename T>
class PoissonSolver {
public:
    explicit PoissonSolver(const Grid<T>& g) : grid_(g) {}
    virtual ~PoissonSolver() = default;
    virtual PoissonKind kind() const = 0;
    virtual void solve(const ScalarField<T>& rhs, ScalarField<T>& p) = 0;
    ScalarField<T> solve(const ScalarField<T>& rhs) {
        ScalarField<T> p(grid_);
        solve(rhs, p);
        return p;
    }
    const Grid<T>& grid() const { return grid_; }
    // Iteration count and relative residual of the last solve (cg only).
    virtual int last_iterations() const { return 0; }
    virtual double last_residual() const { return 0.0; }
    virtual double tolerance() const { return 0.0; }

protected:
    Grid<T> grid_;
};

template <typename T>
std::unique_ptr<PoissonSolver<T>> make_poisson_solver(const Grid<T>& g, PoissonKind kind,
                                                      const PoissonOptions& opts = {});

// Concrete solver access for solver-specific queries.
template <typename T>
class CgSolver;
template <typename T>
const std::vector<double>& cg_residual_history(const PoissonSolver<T>& s);

/// Removes the divergent part: p = solve(D u), u -= G p, ghosts refilled at time t.
/// p and div are caller-owned work buffers.
template <typename T>
void project(const Grid<T>& g, VelocityField<T>& u, PoissonSolver<T>& solver, T t, ScalarField<T>& p,
             ScalarField<T>& div);
template <typename T>
std::pair<VelocityField<T>, ScalarField<T>> project(const Grid<T>& g, const VelocityField<T>& u,
                                                    PoissonSolver<T>& solver, T t = T(0));

/// Symmetric form -W_p D G as a dense matrix over interior pressure points (tests, small grids).
template <typename T>
std::vector<double> dense_pressure_matrix(const Grid<T>& g);

}  // namespace stagflow
