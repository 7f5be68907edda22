#include "stagflow/adjoint.hpp"

namespace stagflow {

namespace {

template <typename T>
void require_periodic(const Grid<T>& g, const char* what) {
    if (!g.all_periodic())
        throw UnsupportedConfiguration(std::string(what) + ": pullbacks support periodic boundaries only");
}

template <typename T>
void reset(const Grid<T>& g, VelocityField<T>& out) {
    if (out.dim != g.dim || out[0].size() != g.size()) out = VelocityField<T>(g);
    out.fill(T(0));
}

template <typename T>
void reset(const Grid<T>& g, ScalarField<T>& out) {
    if (out.size() != g.size()) out = ScalarField<T>(g);
    out.fill(T(0));
}

// Cotangent copy with interior values wrapped into the ghost layer.
template <typename T>
VelocityField<T> wrapped(const Grid<T>& g, const VelocityField<T>& v) {
    VelocityField<T> w = v;
    zero_non_dofs(g, w);
    fill_ghosts_velocity(g, w, T(0));
    return w;
}

template <typename T>
ScalarField<T> wrapped(const Grid<T>& g, const ScalarField<T>& v) {
    ScalarField<T> w = v;
    zero_non_dofs(g, w);
    fill_ghosts_scalar(g, w);
    return w;
}

template <typename T>
inline int axis_index(int a, int i, int j, int k) {
    return a == 0 ? i : a == 1 ? j : k;
}

}  // namespace

//------------------------------------------------------------------------------
// Linear operators
//------------------------------------------------------------------------------

template <typename T>
void divergence_pullback(const Grid<T>& g, const ScalarField<T>& phibar, VelocityField<T>& out) {
    require_periodic(g, "divergence_pullback");
    reset(g, out);
    const ScalarField<T> pb = wrapped(g, phibar);
    for (int a = 0; a < g.dim; ++a) {
        const std::ptrdiff_t s = g.stride[a];
        const auto& w = g.width[a];
        for_box(g, velocity_dofs(g, a), [&](int i, int j, int k, std::ptrdiff_t idx) {
            const int ia = axis_index<T>(a, i, j, k);
            out[a][idx] = pb[idx] / w[ia] - pb[idx + s] / w[ia + 1];
        });
    }
}

template <typename T>
VelocityField<T> divergence_pullback(const Grid<T>& g, const ScalarField<T>& phibar) {
    VelocityField<T> out(g);
    divergence_pullback(g, phibar, out);
    return out;
}

template <typename T>
void pressure_gradient_pullback(const Grid<T>& g, const VelocityField<T>& phibar, ScalarField<T>& out) {
    require_periodic(g, "pressure_gradient_pullback");
    reset(g, out);
    const VelocityField<T> vb = wrapped(g, phibar);
    for (int a = 0; a < g.dim; ++a) {
        const std::ptrdiff_t s = g.stride[a];
        const auto& h = g.dual[a];
        for_box(g, pressure_dofs(g), [&](int i, int j, int k, std::ptrdiff_t idx) {
            const int ia = axis_index<T>(a, i, j, k);
            out[idx] += vb[a][idx - s] / h[ia - 1] - vb[a][idx] / h[ia];
        });
    }
}

template <typename T>
ScalarField<T> pressure_gradient_pullback(const Grid<T>& g, const VelocityField<T>& phibar) {
    ScalarField<T> out(g);
    pressure_gradient_pullback(g, phibar, out);
    return out;
}

template <typename T>
void diffusion_pullback(const Grid<T>& g, const VelocityField<T>& phibar, T nu, VelocityField<T>& out) {
    require_periodic(g, "diffusion_pullback");
    if (nu < 0) throw InvalidArgument("diffusion_pullback: nu must be >= 0");
    reset(g, out);
    const VelocityField<T> vb = wrapped(g, phibar);
    for (int a = 0; a < g.dim; ++a)
        for (int b = 0; b < g.dim; ++b) {
            const std::ptrdiff_t s = g.stride[b];
            const bool same = a == b;
            const auto& wid = g.width[b];
            const auto& dua = g.dual[b];
            // Forward coefficients towards the +b and -b neighbours of a point with index q.
            auto cplus = [&](int q) { return nu / ((same ? dua[q] : wid[q]) * (same ? wid[q + 1] : dua[q])); };
            auto cminus = [&](int q) { return nu / ((same ? dua[q] : wid[q]) * (same ? wid[q] : dua[q - 1])); };
            for_box(g, velocity_dofs(g, a), [&](int i, int j, int k, std::ptrdiff_t idx) {
                const int ib = axis_index<T>(b, i, j, k);
                out[a][idx] += -(cplus(ib) + cminus(ib)) * vb[a][idx] + cplus(ib - 1) * vb[a][idx - s] +
                               cminus(ib + 1) * vb[a][idx + s];
            });
        }
}

template <typename T>
VelocityField<T> diffusion_pullback(const Grid<T>& g, const VelocityField<T>& phibar, T nu) {
    VelocityField<T> out(g);
    diffusion_pullback(g, phibar, nu, out);
    return out;
}

//------------------------------------------------------------------------------
// Convection
//
// With fluxes Phi^ab_K = T^ab_K M^ab_K and Fbar^ab_K = dL/dPhi^ab_K
//   = -phibar^a_K / w^ab_K + phibar^a_{K+e_b} / w^ab_{K+e_b},
// u^c_J collects
//   sum_b (Fbar^cb_J M^cb_J + Fbar^cb_{J-e_b} M^cb_{J-e_b}) / 2          (transported)
//   sum_a (Fbar^ac_J T^ac_J A+ + Fbar^ac_{J-e_a} T^ac_{J-e_a} A-)       (advecting)
//------------------------------------------------------------------------------

template <typename T>
void convection_pullback(const Grid<T>& g, const VelocityField<T>& phibar, const VelocityField<T>& u,
                         VelocityField<T>& out) {
    require_periodic(g, "convection_pullback");
    reset(g, out);
    const VelocityField<T> vb = wrapped(g, phibar);
    const auto& st = g.stride;

    auto tval = [&](int a, int b, std::ptrdiff_t K) { return (u[a][K] + u[a][K + st[b]]) / T(2); };
    auto mval = [&](int a, int b, std::ptrdiff_t K, int ka) {
        const T ap = a == b ? T(0.5) : g.wplus[a][ka];
        const T am = a == b ? T(0.5) : g.wminus[a][ka + 1];
        return ap * u[b][K] + am * u[b][K + st[a]];
    };
    auto fbar = [&](int a, int b, std::ptrdiff_t K, int kb) {
        const auto& w = a == b ? g.dual[b] : g.width[b];
        return -vb[a][K] / w[kb] + vb[a][K + st[b]] / w[kb + 1];
    };

    for (int c = 0; c < g.dim; ++c) {
        for_box(g, velocity_dofs(g, c), [&](int i, int j, int k, std::ptrdiff_t J) {
            const std::array<int, 3> I{i, j, k};
            T acc = 0;
            for (int b = 0; b < g.dim; ++b) {
                const std::ptrdiff_t Km = J - st[b];
                // The c-index of J - e_b shifts only when b == c.
                const int kc_m = I[c] - (b == c ? 1 : 0);
                acc += (fbar(c, b, J, I[b]) * mval(c, b, J, I[c]) + fbar(c, b, Km, I[b] - 1) * mval(c, b, Km, kc_m)) /
                       T(2);
            }
            for (int a = 0; a < g.dim; ++a) {
                const T ap = a == c ? T(0.5) : g.wplus[a][I[a]];
                const T am = a == c ? T(0.5) : g.wminus[a][I[a]];
                const std::ptrdiff_t Km = J - st[a];
                // Index along c of J - e_a.
                const int kc_m = I[c] - (a == c ? 1 : 0);
                acc += fbar(a, c, J, I[c]) * tval(a, c, J) * ap + fbar(a, c, Km, kc_m) * tval(a, c, Km) * am;
            }
            out[c][J] = acc;
        });
    }
}

template <typename T>
VelocityField<T> convection_pullback(const Grid<T>& g, const VelocityField<T>& phibar, const VelocityField<T>& u) {
    VelocityField<T> out(g);
    convection_pullback(g, phibar, u, out);
    return out;
}

//------------------------------------------------------------------------------
// Poisson and projection
//------------------------------------------------------------------------------

template <typename T>
void poisson_pullback(const Grid<T>& g, const ScalarField<T>& pbar, PoissonSolver<T>& solver, ScalarField<T>& out) {
    require_periodic(g, "poisson_pullback");
    // The solve is self-adjoint in the volume-weighted inner product.
    ScalarField<T> r(g);
    for_box(g, pressure_dofs(g),
            [&](int i, int j, int k, std::ptrdiff_t idx) { r[idx] = pbar[idx] / g.cell_volume(i, j, k); });
    solver.solve(r, out);
    for_box(g, full_box(g), [&](int i, int j, int k, std::ptrdiff_t idx) {
        out[idx] = pressure_dofs(g).contains(i, j, k) ? out[idx] * g.cell_volume(i, j, k) : T(0);
    });
}

template <typename T>
ScalarField<T> poisson_pullback(const Grid<T>& g, const ScalarField<T>& pbar, PoissonSolver<T>& solver) {
    ScalarField<T> out(g);
    poisson_pullback(g, pbar, solver, out);
    return out;
}

template <typename T>
VelocityField<T> projection_pullback(const Grid<T>& g, const VelocityField<T>& ubar, PoissonSolver<T>& solver) {
    const ScalarField<T> sb = pressure_gradient_pullback(g, ubar);
    const ScalarField<T> rb = poisson_pullback(g, sb, solver);
    const VelocityField<T> vb = divergence_pullback(g, rb);
    VelocityField<T> out = ubar;
    zero_non_dofs(g, out);
    for (int c = 0; c < g.dim; ++c)
        for (std::size_t q = 0; q < out[c].size(); ++q) out[c].data[q] -= vb[c].data[q];
    return out;
}

template <typename T>
VelocityField<T> momentum_rhs_pullback(const Grid<T>& g, const VelocityField<T>& kbar, const VelocityField<T>& u,
                                       const MomentumTerms<T>& terms) {
    if (terms.closure && terms.closure->active())
        throw UnsupportedConfiguration("momentum_rhs_pullback: eddy-viscosity closures are not differentiable");
    VelocityField<T> out(g);
    if (terms.convection) convection_pullback(g, kbar, u, out);
    if (terms.nu != T(0)) {
        const VelocityField<T> d = diffusion_pullback(g, kbar, terms.nu);
        for (int c = 0; c < g.dim; ++c)
            for (std::size_t q = 0; q < out[c].size(); ++q) out[c].data[q] += d[c].data[q];
    }
    return out;
}

//------------------------------------------------------------------------------
// Losses and unrolled gradient
//------------------------------------------------------------------------------

template <typename T>
LossFunction<T> kinetic_energy_loss() {
    return [](const Grid<T>& g, const VelocityField<T>& u, VelocityField<T>& grad) {
        reset(g, grad);
        for (int c = 0; c < g.dim; ++c)
            for_box(g, velocity_dofs(g, c), [&](int i, int j, int k, std::ptrdiff_t idx) {
                grad[c][idx] = velocity_volume(g, c, i, j, k) * u[c][idx];
            });
        return kinetic_energy(g, u);
    };
}

template <typename T>
LossFunction<T> linear_loss(VelocityField<T> cvec) {
    return [cvec = std::move(cvec)](const Grid<T>& g, const VelocityField<T>& u, VelocityField<T>& grad) {
        reset(g, grad);
        T sum = 0;
        for (int c = 0; c < g.dim; ++c)
            for_box(g, velocity_dofs(g, c), [&](int, int, int, std::ptrdiff_t idx) {
                grad[c][idx] = cvec[c][idx];
                sum += cvec[c][idx] * u[c][idx];
            });
        return sum;
    };
}

namespace {

template <typename T>
void add_scaled(VelocityField<T>& out, T s, const VelocityField<T>& v) {
    for (int c = 0; c < out.dim; ++c)
        for (std::size_t q = 0; q < out[c].size(); ++q) out[c].data[q] += s * v[c].data[q];
}

}  // namespace

template <typename T>
T unrolled_loss(const FlowSetup<T>& setup, PoissonSolver<T>& solver, const ButcherTableau<T>& tab,
                const VelocityField<T>& u0, int n_steps, T dt, const LossFunction<T>& loss) {
    const Grid<T>& g = setup.grid;
    SimState<T> st(g, u0, T(0), RkMethod::ssp33);
    for (int n = 0; n < n_steps; ++n) rk_step(setup, st, dt, tab, solver);
    VelocityField<T> grad(g);
    return loss(g, st.u, grad);
}

template <typename T>
VelocityField<T> unrolled_gradient(const FlowSetup<T>& setup, PoissonSolver<T>& solver, const ButcherTableau<T>& tab,
                                   const VelocityField<T>& u0, int n_steps, T dt, const LossFunction<T>& loss,
                                   T* loss_value) {
    const Grid<T>& g = setup.grid;
    require_periodic(g, "unrolled_gradient");
    const MomentumTerms<T> terms = setup.terms();
    if (terms.closure) throw UnsupportedConfiguration("unrolled_gradient: closures are not differentiable");
    const int s = tab.stages;

    // Forward sweep; the tape holds every stage input.
    SimState<T> st(g, u0, T(0), RkMethod::ssp33);
    std::vector<std::vector<VelocityField<T>>> tape(n_steps);
    for (int n = 0; n < n_steps; ++n) {
        tape[n].reserve(s);
        rk_step(setup, st, dt, tab, solver, &tape[n]);
    }
    VelocityField<T> ubar(g);
    const T value = loss(g, st.u, ubar);
    if (loss_value) *loss_value = value;

    // Reverse sweep.
    std::vector<VelocityField<T>> kbar(s, VelocityField<T>(g));
    for (int n = n_steps - 1; n >= 0; --n) {
        const VelocityField<T> vbar = projection_pullback(g, ubar, solver);
        VelocityField<T> u0bar = vbar;
        for (int j = 0; j < s; ++j) {
            kbar[j].fill(T(0));
            add_scaled(kbar[j], dt * tab.b[j], vbar);
        }
        for (int i = s - 1; i >= 0; --i) {
            const VelocityField<T> wbar = momentum_rhs_pullback(g, kbar[i], tape[n][i], terms);
            if (i == 0) {
                add_scaled(u0bar, T(1), wbar);
                continue;
            }
            const VelocityField<T> vb = projection_pullback(g, wbar, solver);
            add_scaled(u0bar, T(1), vb);
            for (int j = 0; j < i; ++j) add_scaled(kbar[j], dt * tab.A(i, j), vb);
        }
        ubar = std::move(u0bar);
    }
    zero_non_dofs(g, ubar);
    return ubar;
}

#define STAGFLOW_INSTANTIATE(T)                                                                                   \
    template void divergence_pullback<T>(const Grid<T>&, const ScalarField<T>&, VelocityField<T>&);              \
    template VelocityField<T> divergence_pullback<T>(const Grid<T>&, const ScalarField<T>&);                     \
    template void pressure_gradient_pullback<T>(const Grid<T>&, const VelocityField<T>&, ScalarField<T>&);       \
    template ScalarField<T> pressure_gradient_pullback<T>(const Grid<T>&, const VelocityField<T>&);              \
    template void diffusion_pullback<T>(const Grid<T>&, const VelocityField<T>&, T, VelocityField<T>&);          \
    template VelocityField<T> diffusion_pullback<T>(const Grid<T>&, const VelocityField<T>&, T);                 \
    template void convection_pullback<T>(const Grid<T>&, const VelocityField<T>&, const VelocityField<T>&,       \
                                         VelocityField<T>&);                                                     \
    template VelocityField<T> convection_pullback<T>(const Grid<T>&, const VelocityField<T>&,                    \
                                                     const VelocityField<T>&);                                   \
    template void poisson_pullback<T>(const Grid<T>&, const ScalarField<T>&, PoissonSolver<T>&, ScalarField<T>&); \
    template ScalarField<T> poisson_pullback<T>(const Grid<T>&, const ScalarField<T>&, PoissonSolver<T>&);       \
    template VelocityField<T> projection_pullback<T>(const Grid<T>&, const VelocityField<T>&, PoissonSolver<T>&); \
    template VelocityField<T> momentum_rhs_pullback<T>(const Grid<T>&, const VelocityField<T>&,                  \
                                                       const VelocityField<T>&, const MomentumTerms<T>&);        \
    template LossFunction<T> kinetic_energy_loss<T>();                                                           \
    template LossFunction<T> linear_loss<T>(VelocityField<T>);                                                   \
    template T unrolled_loss<T>(const FlowSetup<T>&, PoissonSolver<T>&, const ButcherTableau<T>&,                \
                                const VelocityField<T>&, int, T, const LossFunction<T>&);                        \
    template VelocityField<T> unrolled_gradient<T>(const FlowSetup<T>&, PoissonSolver<T>&,                       \
                                                   const ButcherTableau<T>&, const VelocityField<T>&, int, T,    \
                                                   const LossFunction<T>&, T*);

STAGFLOW_INSTANTIATE(float)
STAGFLOW_INSTANTIATE(double)

}  // namespace stagflow
