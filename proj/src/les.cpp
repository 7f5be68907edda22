#include "stagflow/les.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SVD>

namespace stagflow {

ClosureKind parse_closure_kind(const std::string& name) {
    if (name == "none") return ClosureKind::none;
    if (name == "smagorinsky") return ClosureKind::smagorinsky;
    if (name == "vreman") return ClosureKind::vreman;
    if (name == "qr") return ClosureKind::qr;
    if (name == "wale") return ClosureKind::wale;
    if (name == "sigma") return ClosureKind::sigma;
    if (name == "s3pqr") return ClosureKind::s3pqr;
    throw InvalidArgument("unknown closure kind '" + name + "'");
}

std::string to_string(ClosureKind kind) {
    switch (kind) {
        case ClosureKind::none: return "none";
        case ClosureKind::smagorinsky: return "smagorinsky";
        case ClosureKind::vreman: return "vreman";
        case ClosureKind::qr: return "qr";
        case ClosureKind::wale: return "wale";
        case ClosureKind::sigma: return "sigma";
        case ClosureKind::s3pqr: return "s3pqr";
    }
    return "none";
}

double default_closure_constant(ClosureKind kind) {
    constexpr double cs = 0.17;
    switch (kind) {
        case ClosureKind::none: return 0.0;
        case ClosureKind::smagorinsky: return cs;
        case ClosureKind::vreman: return std::sqrt(2.5 * cs * cs);
        case ClosureKind::qr: return std::sqrt(1.5) / std::numbers::pi;
        case ClosureKind::wale: return std::sqrt(2.5 * cs);
        case ClosureKind::sigma: return 1.35;
        case ClosureKind::s3pqr: return 0.572;
    }
    return 0.0;
}

double channel_closure_constant(ClosureKind kind) {
    switch (kind) {
        case ClosureKind::smagorinsky: return 0.1;
        case ClosureKind::wale: return 0.5;
        case ClosureKind::qr: return std::sqrt(1.5) / std::numbers::pi;
        case ClosureKind::vreman: return std::sqrt(2.5 * 0.1 * 0.1);
        default: return default_closure_constant(kind);
    }
}

//------------------------------------------------------------------------------
// Tensor algebra
//------------------------------------------------------------------------------

namespace {

template <typename T>
Mat3<T> mul(const Mat3<T>& a, const Mat3<T>& b) {
    Mat3<T> c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            T s = 0;
            for (int k = 0; k < 3; ++k) s += a[i][k] * b[k][j];
            c[i][j] = s;
        }
    return c;
}

template <typename T>
T trace(const Mat3<T>& a) {
    return a[0][0] + a[1][1] + a[2][2];
}

// tr(a b) without forming the product.
template <typename T>
T trace_prod(const Mat3<T>& a, const Mat3<T>& b) {
    T s = 0;
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) s += a[i][k] * b[k][i];
    return s;
}

template <typename T>
T frob2(const Mat3<T>& a) {
    T s = 0;
    for (const auto& row : a)
        for (T v : row) s += v * v;
    return s;
}

template <typename T>
T det(const Mat3<T>& a) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

template <typename T>
void split(const Mat3<T>& A, Mat3<T>& S, Mat3<T>& W) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            S[i][j] = (A[i][j] + A[j][i]) / T(2);
            W[i][j] = (A[i][j] - A[j][i]) / T(2);
        }
}

// Zero base with nonzero exponent gives 0; bases are clamped at 0.
template <typename T>
T safe_pow(T base, T e) {
    if (e == T(0)) return T(1);
    base = std::max(base, T(0));
    if (base == T(0)) return T(0);
    return std::pow(base, e);
}

}  // namespace

template <typename T>
Invariants<T> invariants(const Mat3<T>& A, int dim) {
    Mat3<T> S, W;
    split(A, S, W);
    Invariants<T> inv;
    inv.Q_A = -trace_prod(A, A) / T(2);
    inv.Q_S = -frob2(S) / T(2);
    inv.Q_W = frob2(W) / T(2);
    if (dim == 3) {
        // tr(S^3) via Cayley-Hamilton.
        const T t = trace(S);
        const T e2 = (t * t - frob2(S)) / T(2);
        inv.R_S = (t * t * t - T(3) * t * e2 + T(3) * det(S)) / T(3);
    }
    const Mat3<T> A2 = mul(A, A);
    inv.R_A = trace_prod(A2, A) / T(3);
    // 4 (tr(S²W²) - 2 Q_S Q_W) equals |S ω|², which has no cancellation.
    const std::array<T, 3> omega{A[2][1] - A[1][2], A[0][2] - A[2][0], A[1][0] - A[0][1]};
    inv.V2 = 0;
    for (int i = 0; i < 3; ++i) {
        const T s = S[i][0] * omega[0] + S[i][1] * omega[1] + S[i][2] * omega[2];
        inv.V2 += s * s;
    }
    inv.P_AA = frob2(A);
    inv.Q_AA = inv.V2 + inv.Q_A * inv.Q_A;
    inv.R_AA = inv.R_A * inv.R_A;
    return inv;
}

template <typename T>
std::array<T, 3> singular_values(const Mat3<T>& A) {
    Eigen::Matrix<T, 3, 3> M;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) M(i, j) = A[i][j];
    const Eigen::JacobiSVD<Eigen::Matrix<T, 3, 3>> svd(M);
    const auto& sv = svd.singularValues();
    const T s1 = sv[0], s2 = sv[1];
    // det(A) = s1 s2 s3 gives the smallest value to full relative accuracy.
    const T s3 = (s1 > 0 && s2 > 0) ? std::min(std::abs(det(A)) / (s1 * s2), s2) : T(0);
    return {s1, s2, s3};
}

template <typename T>
T nut_smagorinsky(const Mat3<T>& A, T C, T delta) {
    Mat3<T> S, W;
    split(A, S, W);
    const T cd = C * delta;
    return cd * cd * std::sqrt(T(2) * frob2(S));
}

template <typename T>
T nut_vreman(const Mat3<T>& A, T C, const std::array<T, 3>& delta_axes, int dim) {
    const T aa = frob2(A);
    if (aa == T(0)) return T(0);
    // Principal 2x2 minors of beta = A diag(Δ²) Aᵀ expanded by Cauchy-Binet
    // into sums of squares.
    T B = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            for (int k = 0; k < dim; ++k)
                for (int l = k + 1; l < dim; ++l) {
                    const T minor = (A[i][k] * A[j][l] - A[i][l] * A[j][k]) * delta_axes[k] * delta_axes[l];
                    B += minor * minor;
                }
    return C * C * std::sqrt(B / (aa / T(2)));
}

template <typename T>
T nut_qr(const Mat3<T>& A, T C, T delta, int dim) {
    const auto inv = invariants(A, dim);
    if (inv.Q_S == T(0) || inv.R_S == T(0)) return T(0);
    const T cd = C * delta;
    return -cd * cd * std::abs(inv.R_S) / inv.Q_S;
}

template <typename T>
T nut_wale(const Mat3<T>& A, T C, T delta) {
    const Mat3<T> A2 = mul(A, A);
    Mat3<T> Sd, Wd;
    split(A2, Sd, Wd);
    const T t = trace(A2) / T(3);
    for (int i = 0; i < 3; ++i) Sd[i][i] -= t;
    Mat3<T> S, W;
    split(A, S, W);
    const T sdsd = frob2(Sd);
    const T ss = frob2(S);
    const T denom = std::pow(ss, T(2.5)) + std::pow(sdsd, T(1.25));
    if (denom == T(0)) return T(0);
    const T cd = C * delta;
    return cd * cd * std::pow(sdsd, T(1.5)) / denom;
}

template <typename T>
T nut_sigma(const Mat3<T>& A, T C, T delta) {
    const auto s = singular_values(A);
    if (s[0] == T(0)) return T(0);
    const T cd = C * delta;
    return cd * cd * s[2] * (s[0] - s[1]) * (s[1] - s[2]) / (s[0] * s[0]);
}

template <typename T>
T nut_s3pqr(const Mat3<T>& A, T C, T delta, T p, int dim) {
    const auto inv = invariants(A, dim);
    if (inv.P_AA == T(0)) return T(0);
    const T cd = C * delta;
    return cd * cd * safe_pow(inv.P_AA, p) * safe_pow(inv.Q_AA, -(p + T(1))) *
           safe_pow(inv.R_AA, (p + T(2.5)) / T(3));
}

template <typename T>
T eddy_viscosity_point(const ClosureModel<T>& m, const Mat3<T>& A, const std::array<T, 3>& delta_axes, int dim) {
    T prod = 1;
    for (int a = 0; a < dim; ++a) prod *= delta_axes[a];
    const T delta = std::pow(prod, T(1) / T(dim));
    switch (m.kind) {
        case ClosureKind::none: return T(0);
        case ClosureKind::smagorinsky: return nut_smagorinsky(A, m.C, delta);
        case ClosureKind::vreman:
            if (m.filter == FilterRule::geometric_mean) return nut_vreman(A, m.C, {delta, delta, delta}, dim);
            return nut_vreman(A, m.C, delta_axes, dim);
        case ClosureKind::qr: return nut_qr(A, m.C, delta, dim);
        case ClosureKind::wale: return nut_wale(A, m.C, delta);
        case ClosureKind::sigma: return nut_sigma(A, m.C, delta);
        case ClosureKind::s3pqr: return nut_s3pqr(A, m.C, delta, m.p, dim);
    }
    return T(0);
}

//------------------------------------------------------------------------------
// Gradient at pressure points
//------------------------------------------------------------------------------

template <typename T>
Mat3<T> velocity_gradient_at(const Grid<T>& g, const VelocityField<T>& u, int i, int j, int k) {
    const std::array<int, 3> I{i, j, k};
    const std::ptrdiff_t idx = g.index(i, j, k);
    Mat3<T> A{};
    for (int a = 0; a < g.dim; ++a) {
        const auto& f = u[a];
        const std::ptrdiff_t sa = g.stride[a];
        for (int b = 0; b < g.dim; ++b) {
            if (a == b) {
                A[a][a] = (f[idx] - f[idx - sa]) / g.width[a][I[a]];
                continue;
            }
            const std::ptrdiff_t sb = g.stride[b];
            const T hp = g.dual[b][I[b]];
            const T hm = g.dual[b][I[b] - 1];
            // Four edge derivatives surrounding the centre.
            const T e0 = (f[idx + sb] - f[idx]) / hp;
            const T e1 = (f[idx - sa + sb] - f[idx - sa]) / hp;
            const T e2 = (f[idx] - f[idx - sb]) / hm;
            const T e3 = (f[idx - sa] - f[idx - sa - sb]) / hm;
            A[a][b] = (e0 + e1 + e2 + e3) / T(4);
        }
    }
    return A;
}

template <typename T>
GradientTensorField<T> gradient_at_centers(const Grid<T>& g, const VelocityField<T>& u) {
    GradientTensorField<T> out;
    out.A.assign(g.size(), Mat3<T>{});
    for_box(g, pressure_dofs(g),
            [&](int i, int j, int k, std::ptrdiff_t idx) { out.A[idx] = velocity_gradient_at(g, u, i, j, k); });
    return out;
}

template <typename T>
void eddy_viscosity(const Grid<T>& g, const VelocityField<T>& u, const ClosureModel<T>& m, ScalarField<T>& nu_t) {
    if (nu_t.size() != g.size()) nu_t = ScalarField<T>(g);
    nu_t.fill(T(0));
    if (!m.active()) return;
    for_box(g, pressure_dofs(g), [&](int i, int j, int k, std::ptrdiff_t idx) {
        const Mat3<T> A = velocity_gradient_at(g, u, i, j, k);
        const std::array<T, 3> d{g.width[0][i], g.width[1][j], g.width[2][k]};
        nu_t[idx] = eddy_viscosity_point(m, A, d, g.dim);
    });
    fill_ghosts_scalar(g, nu_t);
}

//------------------------------------------------------------------------------
// Stress divergence
//------------------------------------------------------------------------------

template <typename T>
void eddy_stress_divergence_add(const Grid<T>& g, const VelocityField<T>& u, const ScalarField<T>& nu_t,
                                VelocityField<T>& out) {
    for (int a = 0; a < g.dim; ++a) {
        const auto& ua = u[a];
        const std::ptrdiff_t sa = g.stride[a];
        auto& o = out[a];
        for (int b = 0; b < g.dim; ++b) {
            const std::ptrdiff_t sb = g.stride[b];
            if (a == b) {
                // tau at centres, differenced across the face.
                auto tau = [&](std::ptrdiff_t c, int ia) {
                    return T(2) * nu_t[c] * (ua[c] - ua[c - sa]) / g.width[a][ia];
                };
                for_box(g, velocity_dofs(g, a), [&](int i, int j, int k, std::ptrdiff_t idx) {
                    const int ia = a == 0 ? i : a == 1 ? j : k;
                    o[idx] += (tau(idx + sa, ia + 1) - tau(idx, ia)) / g.dual[a][ia];
                });
                continue;
            }
            const auto& ub = u[b];
            // tau on the edge right of centre e in both a and b.
            auto tau = [&](std::ptrdiff_t e, int ea, int eb) {
                const T nu = (nu_t[e] + nu_t[e + sa] + nu_t[e + sb] + nu_t[e + sa + sb]) / T(4);
                const T s = ((ua[e + sb] - ua[e]) / g.dual[b][eb] + (ub[e + sa] - ub[e]) / g.dual[a][ea]) / T(2);
                return T(2) * nu * s;
            };
            for_box(g, velocity_dofs(g, a), [&](int i, int j, int k, std::ptrdiff_t idx) {
                const int ia = a == 0 ? i : a == 1 ? j : k;
                const int ib = b == 0 ? i : b == 1 ? j : k;
                o[idx] += (tau(idx, ia, ib) - tau(idx - sb, ia, ib - 1)) / g.width[b][ib];
            });
        }
    }
}

template <typename T>
void eddy_stress_divergence(const Grid<T>& g, const VelocityField<T>& u, const ScalarField<T>& nu_t,
                            VelocityField<T>& out) {
    if (out.dim != g.dim || out[0].size() != g.size()) out = VelocityField<T>(g);
    out.fill(T(0));
    eddy_stress_divergence_add(g, u, nu_t, out);
}

template <typename T>
VelocityField<T> eddy_stress_divergence(const Grid<T>& g, const VelocityField<T>& u, const ScalarField<T>& nu_t) {
    VelocityField<T> out(g);
    eddy_stress_divergence(g, u, nu_t, out);
    return out;
}

#define STAGFLOW_INSTANTIATE(T)                                                                                  \
    template Invariants<T> invariants<T>(const Mat3<T>&, int);                                                  \
    template std::array<T, 3> singular_values<T>(const Mat3<T>&);                                               \
    template T nut_smagorinsky<T>(const Mat3<T>&, T, T);                                                        \
    template T nut_vreman<T>(const Mat3<T>&, T, const std::array<T, 3>&, int);                                  \
    template T nut_qr<T>(const Mat3<T>&, T, T, int);                                                            \
    template T nut_wale<T>(const Mat3<T>&, T, T);                                                               \
    template T nut_sigma<T>(const Mat3<T>&, T, T);                                                              \
    template T nut_s3pqr<T>(const Mat3<T>&, T, T, T, int);                                                      \
    template T eddy_viscosity_point<T>(const ClosureModel<T>&, const Mat3<T>&, const std::array<T, 3>&, int);   \
    template Mat3<T> velocity_gradient_at<T>(const Grid<T>&, const VelocityField<T>&, int, int, int);           \
    template GradientTensorField<T> gradient_at_centers<T>(const Grid<T>&, const VelocityField<T>&);            \
    template void eddy_viscosity<T>(const Grid<T>&, const VelocityField<T>&, const ClosureModel<T>&,            \
                                    ScalarField<T>&);                                                           \
    template void eddy_stress_divergence_add<T>(const Grid<T>&, const VelocityField<T>&, const ScalarField<T>&, \
                                                VelocityField<T>&);                                             \
    template void eddy_stress_divergence<T>(const Grid<T>&, const VelocityField<T>&, const ScalarField<T>&,     \
                                            VelocityField<T>&);                                                 \
    template VelocityField<T> eddy_stress_divergence<T>(const Grid<T>&, const VelocityField<T>&,                \
                                                        const ScalarField<T>&);

STAGFLOW_INSTANTIATE(float)
STAGFLOW_INSTANTIATE(double)

}  // namespace stagflow
