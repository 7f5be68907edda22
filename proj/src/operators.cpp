#include "stagflow/operators.hpp"

#include <cmath>

#include "stagflow/les.hpp"

namespace stagflow {

namespace {

template <typename T>
void ensure_shape(const Grid<T>& g, VelocityField<T>& out) {
    if (out.dim != g.dim || out[0].size() != g.size()) out = VelocityField<T>(g);
}

template <typename T>
void ensure_shape(const Grid<T>& g, ScalarField<T>& out) {
    if (out.size() != g.size()) out = ScalarField<T>(g);
}

}  // namespace

//------------------------------------------------------------------------------
// Divergence and gradient
//------------------------------------------------------------------------------

template <typename T>
void divergence(const Grid<T>& g, const VelocityField<T>& u, ScalarField<T>& out) {
    ensure_shape(g, out);
    out.fill(T(0));
    for (int a = 0; a < g.dim; ++a) {
        const std::ptrdiff_t s = g.stride[a];
        const auto& w = g.width[a];
        const auto& f = u[a];
        for_box(g, pressure_dofs(g), [&](int i, int j, int k, std::ptrdiff_t idx) {
            const int ia = a == 0 ? i : a == 1 ? j : k;
            out[idx] += (f[idx] - f[idx - s]) / w[ia];
        });
    }
}

template <typename T>
ScalarField<T> divergence(const Grid<T>& g, const VelocityField<T>& u) {
    ScalarField<T> out(g);
    divergence(g, u, out);
    return out;
}

template <typename T>
void pressure_gradient(const Grid<T>& g, const ScalarField<T>& p, VelocityField<T>& out) {
    ensure_shape(g, out);
    out.fill(T(0));
    for (int a = 0; a < g.dim; ++a) {
        const std::ptrdiff_t s = g.stride[a];
        const auto& h = g.dual[a];
        auto& f = out[a];
        for_box(g, velocity_dofs(g, a), [&](int i, int j, int k, std::ptrdiff_t idx) {
            const int ia = a == 0 ? i : a == 1 ? j : k;
            f[idx] = (p[idx + s] - p[idx]) / h[ia];
        });
    }
}

template <typename T>
VelocityField<T> pressure_gradient(const Grid<T>& g, const ScalarField<T>& p) {
    VelocityField<T> out(g);
    pressure_gradient(g, p, out);
    return out;
}

template <typename T>
void laplacian(const Grid<T>& g, const ScalarField<T>& p, ScalarField<T>& out) {
    ensure_shape(g, out);
    out.fill(T(0));
    for (int a = 0; a < g.dim; ++a) {
        const std::ptrdiff_t s = g.stride[a];
        const auto& w = g.width[a];
        const auto& h = g.dual[a];
        const bool per = g.periodic(a);
        const int n = g.n[a];
        for_box(g, pressure_dofs(g), [&](int i, int j, int k, std::ptrdiff_t idx) {
            const int ia = a == 0 ? i : a == 1 ? j : k;
            const T right = (per || ia < n) ? (p[idx + s] - p[idx]) / h[ia] : T(0);
            const T left = (per || ia > 1) ? (p[idx] - p[idx - s]) / h[ia - 1] : T(0);
            out[idx] += (right - left) / w[ia];
        });
    }
}

//------------------------------------------------------------------------------
// Diffusion
//------------------------------------------------------------------------------

template <typename T>
void diffusion_add(const Grid<T>& g, const VelocityField<T>& u, T nu, VelocityField<T>& out) {
    if (nu < 0) throw InvalidArgument("diffusion: nu must be >= 0");
    for (int a = 0; a < g.dim; ++a) {
        const auto& f = u[a];
        auto& o = out[a];
        for (int b = 0; b < g.dim; ++b) {
            const std::ptrdiff_t s = g.stride[b];
            const auto& wid = g.width[b];
            const auto& dua = g.dual[b];
            const bool same = a == b;
            for_box(g, velocity_dofs(g, a), [&](int i, int j, int k, std::ptrdiff_t idx) {
                const int ib = b == 0 ? i : b == 1 ? j : k;
                const T w = same ? dua[ib] : wid[ib];
                const T hr = same ? wid[ib + 1] : dua[ib];
                const T hl = same ? wid[ib] : dua[ib - 1];
                o[idx] += nu / w * ((f[idx + s] - f[idx]) / hr - (f[idx] - f[idx - s]) / hl);
            });
        }
    }
}

template <typename T>
void diffusion(const Grid<T>& g, const VelocityField<T>& u, T nu, VelocityField<T>& out) {
    ensure_shape(g, out);
    out.fill(T(0));
    diffusion_add(g, u, nu, out);
}

template <typename T>
VelocityField<T> diffusion(const Grid<T>& g, const VelocityField<T>& u, T nu) {
    VelocityField<T> out(g);
    diffusion(g, u, nu, out);
    return out;
}

//------------------------------------------------------------------------------
// Convection
//
// phi^a_I = -sum_b (T^ab_I M^ab_I - T^ab_{I-e_b} M^ab_{I-e_b}) / w^ab_I
//   T^ab_I = (u^a_I + u^a_{I+e_b}) / 2           transported component
//   M^ab_I = A+ u^b_I + A- u^b_{I+e_a}            advecting component
// with A+, A- the volume fractions along axis a (1/2 when a == b).
//------------------------------------------------------------------------------

template <typename T>
void convection_add(const Grid<T>& g, const VelocityField<T>& u, VelocityField<T>& out) {
    for (int a = 0; a < g.dim; ++a) {
        const auto& ua = u[a];
        auto& o = out[a];
        const std::ptrdiff_t sa = g.stride[a];
        const auto& wp = g.wplus[a];
        const auto& wm = g.wminus[a];
        for (int b = 0; b < g.dim; ++b) {
            const auto& ub = u[b];
            const std::ptrdiff_t sb = g.stride[b];
            const bool same = a == b;
            const auto& wb = same ? g.dual[b] : g.width[b];
            for_box(g, velocity_dofs(g, a), [&](int i, int j, int k, std::ptrdiff_t idx) {
                const int ia = a == 0 ? i : a == 1 ? j : k;
                const int ib = b == 0 ? i : b == 1 ? j : k;
                const T ap = same ? T(0.5) : wp[ia];
                const T am = same ? T(0.5) : wm[ia + 1];
                const T tp = (ua[idx] + ua[idx + sb]) / T(2);
                const T tm = (ua[idx - sb] + ua[idx]) / T(2);
                const T mp = ap * ub[idx] + am * ub[idx + sa];
                const T mm = ap * ub[idx - sb] + am * ub[idx - sb + sa];
                o[idx] -= (tp * mp - tm * mm) / wb[ib];
            });
        }
    }
}

template <typename T>
void convection(const Grid<T>& g, const VelocityField<T>& u, VelocityField<T>& out) {
    ensure_shape(g, out);
    out.fill(T(0));
    convection_add(g, u, out);
}

template <typename T>
VelocityField<T> convection(const Grid<T>& g, const VelocityField<T>& u) {
    VelocityField<T> out(g);
    convection(g, u, out);
    return out;
}

//------------------------------------------------------------------------------
// Reductions
//------------------------------------------------------------------------------

template <typename T>
T inner_w(const Grid<T>& g, const VelocityField<T>& u, const VelocityField<T>& v) {
    T sum = 0;
    for (int c = 0; c < g.dim; ++c)
        for_box(g, velocity_dofs(g, c), [&](int i, int j, int k, std::ptrdiff_t idx) {
            sum += velocity_volume(g, c, i, j, k) * u[c][idx] * v[c][idx];
        });
    return sum;
}

template <typename T>
T inner_w(const Grid<T>& g, const ScalarField<T>& p, const ScalarField<T>& q) {
    T sum = 0;
    for_box(g, pressure_dofs(g),
            [&](int i, int j, int k, std::ptrdiff_t idx) { sum += g.cell_volume(i, j, k) * p[idx] * q[idx]; });
    return sum;
}

template <typename T>
T kinetic_energy(const Grid<T>& g, const VelocityField<T>& u) {
    return inner_w(g, u, u) / T(2);
}

template <typename T>
T mean_w(const Grid<T>& g, const ScalarField<T>& p) {
    T sum = 0, vol = 0;
    for_box(g, pressure_dofs(g), [&](int i, int j, int k, std::ptrdiff_t idx) {
        const T v = g.cell_volume(i, j, k);
        sum += v * p[idx];
        vol += v;
    });
    return sum / vol;
}

template <typename T>
T max_abs_interior(const Grid<T>& g, const ScalarField<T>& p) {
    T m = 0;
    for_box(g, pressure_dofs(g), [&](int, int, int, std::ptrdiff_t idx) { m = std::max(m, std::abs(p[idx])); });
    return m;
}

//------------------------------------------------------------------------------
// Momentum right-hand side
//------------------------------------------------------------------------------

template <typename T>
void momentum_rhs(const Grid<T>& g, const VelocityField<T>& u, const MomentumTerms<T>& terms,
                  VelocityField<T>& out, ScalarField<T>& nu_t) {
    ensure_shape(g, out);
    out.fill(T(0));
    if (terms.convection) convection_add(g, u, out);
    if (terms.nu != T(0)) diffusion_add(g, u, terms.nu, out);
    if (terms.force) {
        for (int c = 0; c < g.dim; ++c) {
            const auto& f = (*terms.force)[c];
            for_box(g, velocity_dofs(g, c), [&](int, int, int, std::ptrdiff_t idx) { out[c][idx] += f[idx]; });
        }
    }
    if (terms.closure && terms.closure->active()) {
        eddy_viscosity(g, u, *terms.closure, nu_t);
        eddy_stress_divergence_add(g, u, nu_t, out);
    }
}

template <typename T>
VelocityField<T> momentum_rhs(const Grid<T>& g, const VelocityField<T>& u, const MomentumTerms<T>& terms) {
    VelocityField<T> out(g);
    ScalarField<T> nu_t(g);
    momentum_rhs(g, u, terms, out, nu_t);
    return out;
}

#define STAGFLOW_INSTANTIATE(T)                                                                                \
    template void divergence<T>(const Grid<T>&, const VelocityField<T>&, ScalarField<T>&);                    \
    template ScalarField<T> divergence<T>(const Grid<T>&, const VelocityField<T>&);                           \
    template void pressure_gradient<T>(const Grid<T>&, const ScalarField<T>&, VelocityField<T>&);             \
    template VelocityField<T> pressure_gradient<T>(const Grid<T>&, const ScalarField<T>&);                    \
    template void laplacian<T>(const Grid<T>&, const ScalarField<T>&, ScalarField<T>&);                       \
    template void diffusion_add<T>(const Grid<T>&, const VelocityField<T>&, T, VelocityField<T>&);            \
    template void diffusion<T>(const Grid<T>&, const VelocityField<T>&, T, VelocityField<T>&);                \
    template VelocityField<T> diffusion<T>(const Grid<T>&, const VelocityField<T>&, T);                       \
    template void convection_add<T>(const Grid<T>&, const VelocityField<T>&, VelocityField<T>&);              \
    template void convection<T>(const Grid<T>&, const VelocityField<T>&, VelocityField<T>&);                  \
    template VelocityField<T> convection<T>(const Grid<T>&, const VelocityField<T>&);                         \
    template T inner_w<T>(const Grid<T>&, const VelocityField<T>&, const VelocityField<T>&);                  \
    template T inner_w<T>(const Grid<T>&, const ScalarField<T>&, const ScalarField<T>&);                      \
    template T kinetic_energy<T>(const Grid<T>&, const VelocityField<T>&);                                    \
    template T mean_w<T>(const Grid<T>&, const ScalarField<T>&);                                              \
    template T max_abs_interior<T>(const Grid<T>&, const ScalarField<T>&);                                    \
    template void momentum_rhs<T>(const Grid<T>&, const VelocityField<T>&, const MomentumTerms<T>&,           \
                                  VelocityField<T>&, ScalarField<T>&);                                        \
    template VelocityField<T> momentum_rhs<T>(const Grid<T>&, const VelocityField<T>&, const MomentumTerms<T>&);

STAGFLOW_INSTANTIATE(float)
STAGFLOW_INSTANTIATE(double)

}  // namespace stagflow
