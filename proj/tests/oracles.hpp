#pragma once

// Independent reference implementations used by the tests: dense matrices by
// basis probing, index-by-index stencils on wrapped interior arrays, and
// explicit matrix algebra for the closures.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "stagflow/adjoint.hpp"
#include "stagflow/les.hpp"
#include "stagflow/operators.hpp"
#include "stagflow/poisson.hpp"

namespace oracle {

using namespace stagflow;

struct Dof {
    int comp;
    std::ptrdiff_t idx;
    std::array<int, 3> ijk;
};

template <typename T>
std::vector<Dof> velocity_dof_list(const Grid<T>& g) {
    std::vector<Dof> out;
    for (int c = 0; c < g.dim; ++c)
        for_box(g, velocity_dofs(g, c), [&](int i, int j, int k, std::ptrdiff_t idx) { out.push_back({c, idx, {i, j, k}}); });
    return out;
}

template <typename T>
std::vector<Dof> pressure_dof_list(const Grid<T>& g) {
    std::vector<Dof> out;
    for_box(g, pressure_dofs(g), [&](int i, int j, int k, std::ptrdiff_t idx) { out.push_back({-1, idx, {i, j, k}}); });
    return out;
}

template <typename T>
Eigen::VectorXd weights_u(const Grid<T>& g) {
    const auto d = velocity_dof_list(g);
    Eigen::VectorXd w(d.size());
    for (std::size_t q = 0; q < d.size(); ++q) w[q] = velocity_volume(g, d[q].comp, d[q].ijk[0], d[q].ijk[1], d[q].ijk[2]);
    return w;
}

template <typename T>
Eigen::VectorXd weights_p(const Grid<T>& g) {
    const auto d = pressure_dof_list(g);
    Eigen::VectorXd w(d.size());
    for (std::size_t q = 0; q < d.size(); ++q) w[q] = g.cell_volume(d[q].ijk[0], d[q].ijk[1], d[q].ijk[2]);
    return w;
}

template <typename T>
Eigen::VectorXd to_vec(const Grid<T>& g, const VelocityField<T>& u) {
    const auto d = velocity_dof_list(g);
    Eigen::VectorXd v(d.size());
    for (std::size_t q = 0; q < d.size(); ++q) v[q] = u[d[q].comp][d[q].idx];
    return v;
}

template <typename T>
Eigen::VectorXd to_vec(const Grid<T>& g, const ScalarField<T>& p) {
    const auto d = pressure_dof_list(g);
    Eigen::VectorXd v(d.size());
    for (std::size_t q = 0; q < d.size(); ++q) v[q] = p[d[q].idx];
    return v;
}

template <typename T>
VelocityField<T> velocity_from(const Grid<T>& g, const Eigen::VectorXd& v, T t = T(0)) {
    VelocityField<T> u(g);
    const auto d = velocity_dof_list(g);
    for (std::size_t q = 0; q < d.size(); ++q) u[d[q].comp][d[q].idx] = static_cast<T>(v[q]);
    fill_ghosts_velocity(g, u, t);
    return u;
}

template <typename T>
ScalarField<T> scalar_from(const Grid<T>& g, const Eigen::VectorXd& v) {
    ScalarField<T> p(g);
    const auto d = pressure_dof_list(g);
    for (std::size_t q = 0; q < d.size(); ++q) p[d[q].idx] = static_cast<T>(v[q]);
    fill_ghosts_scalar(g, p);
    return p;
}

// Dense matrix of a linear map by applying it to every unit vector.
template <typename T, typename In, typename Out>
Eigen::MatrixXd probe(const Grid<T>& g, std::size_t n_in, const std::function<Out(const In&)>& op,
                      const std::function<In(const Eigen::VectorXd&)>& make_in,
                      const std::function<Eigen::VectorXd(const Out&)>& read_out) {
    Eigen::MatrixXd M;
    for (std::size_t q = 0; q < n_in; ++q) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n_in);
        e[q] = 1.0;
        const Eigen::VectorXd col = read_out(op(make_in(e)));
        if (q == 0) M.resize(col.size(), n_in);
        M.col(q) = col;
    }
    (void)g;
    return M;
}

template <typename T>
Eigen::MatrixXd dense_vv(const Grid<T>& g, const std::function<VelocityField<T>(const VelocityField<T>&)>& op) {
    const std::size_t n = velocity_dof_list(g).size();
    return probe<T, VelocityField<T>, VelocityField<T>>(
        g, n, op, [&](const Eigen::VectorXd& e) { return velocity_from(g, e); },
        [&](const VelocityField<T>& f) { return to_vec(g, f); });
}

template <typename T>
Eigen::MatrixXd dense_vs(const Grid<T>& g, const std::function<ScalarField<T>(const VelocityField<T>&)>& op) {
    const std::size_t n = velocity_dof_list(g).size();
    return probe<T, VelocityField<T>, ScalarField<T>>(
        g, n, op, [&](const Eigen::VectorXd& e) { return velocity_from(g, e); },
        [&](const ScalarField<T>& f) { return to_vec(g, f); });
}

template <typename T>
Eigen::MatrixXd dense_sv(const Grid<T>& g, const std::function<VelocityField<T>(const ScalarField<T>&)>& op) {
    const std::size_t n = pressure_dof_list(g).size();
    return probe<T, ScalarField<T>, VelocityField<T>>(
        g, n, op, [&](const Eigen::VectorXd& e) { return scalar_from(g, e); },
        [&](const VelocityField<T>& f) { return to_vec(g, f); });
}

template <typename T>
Eigen::MatrixXd dense_ss(const Grid<T>& g, const std::function<ScalarField<T>(const ScalarField<T>&)>& op) {
    const std::size_t n = pressure_dof_list(g).size();
    return probe<T, ScalarField<T>, ScalarField<T>>(
        g, n, op, [&](const Eigen::VectorXd& e) { return scalar_from(g, e); },
        [&](const ScalarField<T>& f) { return to_vec(g, f); });
}

inline double rel_frob(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double nb = std::max(a.norm(), b.norm());
    return nb == 0 ? (a - b).norm() : (a - b).norm() / nb;
}

//------------------------------------------------------------------------------
// Grids and random fields
//------------------------------------------------------------------------------

inline Grid<double> periodic_grid(const std::vector<int>& n, bool stretched, double L = 1.0) {
    std::vector<AxisCoords<double>> axes;
    for (std::size_t a = 0; a < n.size(); ++a)
        axes.push_back(stretched ? tanh_grid(0.0, L, n[a], 1.2 + 0.3 * a) : uniform_grid(0.0, L, n[a]));
    return build_grid(axes, BoundarySpec<double>::all_periodic());
}

template <typename T>
VelocityField<T> random_velocity(const Grid<T>& g, std::mt19937_64& rng, T amp = T(1)) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    VelocityField<T> u(g);
    for (int c = 0; c < g.dim; ++c)
        for_box(g, velocity_dofs(g, c), [&](int, int, int, std::ptrdiff_t idx) { u[c][idx] = static_cast<T>(amp * U(rng)); });
    fill_ghosts_velocity(g, u, T(0));
    return u;
}

template <typename T>
ScalarField<T> random_scalar(const Grid<T>& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    ScalarField<T> p(g);
    for_box(g, pressure_dofs(g), [&](int, int, int, std::ptrdiff_t idx) { p[idx] = static_cast<T>(U(rng)); });
    fill_ghosts_scalar(g, p);
    return p;
}

// Euclidean inner product over degrees of freedom.
template <typename T>
double dot(const Grid<T>& g, const VelocityField<T>& a, const VelocityField<T>& b) {
    return to_vec(g, a).dot(to_vec(g, b));
}

template <typename T>
double dot(const Grid<T>& g, const ScalarField<T>& a, const ScalarField<T>& b) {
    return to_vec(g, a).dot(to_vec(g, b));
}

//------------------------------------------------------------------------------
// Convection on wrapped interior arrays, periodic grids only.
//------------------------------------------------------------------------------

inline VelocityField<double> convection_reference(const Grid<double>& g, const VelocityField<double>& u) {
    const int d = g.dim;
    std::array<int, 3> n = g.n;
    std::array<std::vector<double>, 3> D;  // interior widths
    for (int a = 0; a < 3; ++a) D[a] = a < d ? g.axes[a].widths : std::vector<double>{1.0};
    auto wrap = [&](int a, int i) { return ((i % n[a]) + n[a]) % n[a]; };
    auto width = [&](int a, int i) { return D[a][wrap(a, i)]; };
    auto dualw = [&](int a, int i) { return 0.5 * (width(a, i) + width(a, i + 1)); };
    // u^c at interior position I (zero-based, wrapped).
    auto U = [&](int c, std::array<int, 3> I) {
        for (int a = 0; a < d; ++a) I[a] = wrap(a, I[a]);
        return u[c][g.index(I[0] + g.lo[0], I[1] + g.lo[1], I[2] + g.lo[2])];
    };
    auto shift = [](std::array<int, 3> I, int a, int s) {
        I[a] += s;
        return I;
    };
    VelocityField<double> out(g);
    for (int a = 0; a < d; ++a)
        for (int k = 0; k < n[2]; ++k)
            for (int j = 0; j < n[1]; ++j)
                for (int i = 0; i < n[0]; ++i) {
                    const std::array<int, 3> I{i, j, k};
                    double phi = 0;
                    for (int b = 0; b < d; ++b) {
                        auto Tf = [&](std::array<int, 3> K) { return 0.5 * (U(a, K) + U(a, shift(K, b, 1))); };
                        auto Mf = [&](std::array<int, 3> K) {
                            if (a == b) return 0.5 * (U(b, K) + U(b, shift(K, a, 1)));
                            const double w0 = width(a, K[a]), w1 = width(a, K[a] + 1);
                            return (w0 * U(b, K) + w1 * U(b, shift(K, a, 1))) / (w0 + w1);
                        };
                        const double w = a == b ? dualw(b, I[b]) : width(b, I[b]);
                        const auto Im = shift(I, b, -1);
                        phi -= (Tf(I) * Mf(I) - Tf(Im) * Mf(Im)) / w;
                    }
                    out[a][g.index(i + g.lo[0], j + g.lo[1], k + g.lo[2])] = phi;
                }
    return out;
}

//------------------------------------------------------------------------------
// Closures by explicit matrix algebra.
//------------------------------------------------------------------------------

// The closure oracle works in extended precision so that its own rounding
// stays well below the tolerances it is used to check.
using Real = long double;
using Mat3L = Eigen::Matrix<Real, 3, 3>;

inline Mat3L to_eigen(const Mat3<double>& A) {
    Mat3L M;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) M(i, j) = A[i][j];
    return M;
}

struct InvariantsRef {
    double Q_A, Q_S, Q_W, R_S, R_A, V2, P_AA, Q_AA, R_AA;
};

struct InvariantsL {
    Real Q_A, Q_S, Q_W, R_S, R_A, V2, P_AA, Q_AA, R_AA;
};

inline InvariantsL invariants_long(const Mat3<double>& Ain) {
    const Mat3L A = to_eigen(Ain);
    const Mat3L S = (A + A.transpose()) / 2;
    const Mat3L W = (A - A.transpose()) / 2;
    InvariantsL r{};
    r.Q_A = -(A * A).trace() / 2;
    r.Q_S = -(S * S).trace() / 2;
    r.Q_W = -(W * W).trace() / 2;
    r.R_S = (S * S * S).trace() / 3;
    r.R_A = (A * A * A).trace() / 3;
    r.V2 = 4 * ((S * S * W * W).trace() - 2 * r.Q_S * r.Q_W);
    r.P_AA = (A * A.transpose()).trace();
    r.Q_AA = r.V2 + r.Q_A * r.Q_A;
    r.R_AA = r.R_A * r.R_A;
    return r;
}

inline InvariantsRef invariants_reference(const Mat3<double>& A) {
    const InvariantsL r = invariants_long(A);
    return {double(r.Q_A), double(r.Q_S), double(r.Q_W), double(r.R_S), double(r.R_A),
            double(r.V2),  double(r.P_AA), double(r.Q_AA), double(r.R_AA)};
}

inline double nut_reference(ClosureKind kind, const Mat3<double>& Ain, double C, const std::array<double, 3>& dax,
                            int dim, double p = -2.5) {
    const Mat3L A = to_eigen(Ain);
    const Mat3L S = (A + A.transpose()) / 2;
    Real prod = 1;
    for (int a = 0; a < dim; ++a) prod *= dax[a];
    const Real delta = std::pow(prod, Real(1) / dim);
    const Real cd2 = Real(C) * C * delta * delta;
    const auto inv = invariants_long(Ain);
    switch (kind) {
        case ClosureKind::none: return 0;
        case ClosureKind::smagorinsky: return double(cd2 * std::sqrt(2 * (S.array() * S.array()).sum()));
        case ClosureKind::vreman: {
            const Real aa = (A.array() * A.array()).sum();
            if (aa == 0) return 0;
            Mat3L Dm = Mat3L::Zero();
            for (int m = 0; m < dim; ++m) Dm(m, m) = Real(dax[m]) * dax[m];
            const Mat3L beta = A * Dm * A.transpose();
            const Real B = beta(0, 0) * beta(1, 1) - beta(0, 1) * beta(0, 1) + beta(0, 0) * beta(2, 2) -
                           beta(0, 2) * beta(0, 2) + beta(1, 1) * beta(2, 2) - beta(1, 2) * beta(1, 2);
            return double(Real(C) * C * std::sqrt(std::max(B, Real(0)) / (aa / 2)));
        }
        case ClosureKind::qr: {
            if (dim == 2) return 0;
            if (inv.Q_S == 0) return 0;
            return double(-cd2 * std::abs(inv.R_S) / inv.Q_S);
        }
        case ClosureKind::wale: {
            const Mat3L A2 = A * A;
            Mat3L Sd = (A2 + A2.transpose()) / 2;
            Sd -= (A2.trace() / 3) * Mat3L::Identity();
            const Real sdsd = (Sd.array() * Sd.array()).sum();
            const Real ss = (S.array() * S.array()).sum();
            const Real den = std::pow(ss, Real(2.5)) + std::pow(sdsd, Real(1.25));
            return den == 0 ? 0 : double(cd2 * std::pow(sdsd, Real(1.5)) / den);
        }
        case ClosureKind::sigma: {
            Eigen::JacobiSVD<Mat3L> svd(A);
            const auto s = svd.singularValues();
            if (s[0] == 0) return 0;
            return double(cd2 * s[2] * (s[0] - s[1]) * (s[1] - s[2]) / (s[0] * s[0]));
        }
        case ClosureKind::s3pqr: {
            if (inv.P_AA == 0) return 0;
            auto pw = [](Real b, Real e) {
                if (e == 0) return Real(1);
                if (b <= 0) return Real(0);
                return std::pow(b, e);
            };
            return double(cd2 * pw(inv.P_AA, p) * pw(inv.Q_AA, -(p + 1)) * pw(inv.R_AA, (p + 2.5) / 3));
        }
    }
    return 0;
}

// Random gradient tensor; 2D tensors are traceless and zero-padded.
inline Mat3<double> random_tensor(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> N(0.0, 1.0);
    Mat3<double> A{};
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) A[i][j] = N(rng);
    if (dim == 2) A[1][1] = -A[0][0];
    return A;
}

}  // namespace oracle
