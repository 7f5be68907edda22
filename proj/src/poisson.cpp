#include "stagflow/poisson.hpp"

#include <fftw3.h>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <type_traits>

#include "stagflow/operators.hpp"

namespace stagflow {

PoissonKind parse_poisson_kind(const std::string& name) {
    if (name == "spectral") return PoissonKind::spectral;
    if (name == "direct") return PoissonKind::direct;
    if (name == "cg") return PoissonKind::cg;
    throw InvalidArgument("unknown poisson solver '" + name + "'");
}

std::string to_string(PoissonKind kind) {
    switch (kind) {
        case PoissonKind::spectral: return "spectral";
        case PoissonKind::direct: return "direct";
        case PoissonKind::cg: return "cg";
    }
    return "cg";
}

//------------------------------------------------------------------------------
// FFTW backend
//------------------------------------------------------------------------------

namespace {

template <typename T>
struct Fftw;

template <>
struct Fftw<double> {
    using plan = fftw_plan;
    using cpx = fftw_complex;
    static double* alloc_real(std::size_t n) { return fftw_alloc_real(n); }
    static cpx* alloc_complex(std::size_t n) { return fftw_alloc_complex(n); }
    static void free(void* p) { fftw_free(p); }
    static plan r2c(int rank, const int* n, double* in, cpx* out) {
        return fftw_plan_dft_r2c(rank, n, in, out, FFTW_ESTIMATE);
    }
    static plan c2r(int rank, const int* n, cpx* in, double* out) {
        return fftw_plan_dft_c2r(rank, n, in, out, FFTW_ESTIMATE);
    }
    static void execute(plan p) { fftw_execute(p); }
    static void destroy(plan p) { fftw_destroy_plan(p); }
};

template <>
struct Fftw<float> {
    using plan = fftwf_plan;
    using cpx = fftwf_complex;
    static float* alloc_real(std::size_t n) { return fftwf_alloc_real(n); }
    static cpx* alloc_complex(std::size_t n) { return fftwf_alloc_complex(n); }
    static void free(void* p) { fftwf_free(p); }
    static plan r2c(int rank, const int* n, float* in, cpx* out) {
        return fftwf_plan_dft_r2c(rank, n, in, out, FFTW_ESTIMATE);
    }
    static plan c2r(int rank, const int* n, cpx* in, float* out) {
        return fftwf_plan_dft_c2r(rank, n, in, out, FFTW_ESTIMATE);
    }
    static void execute(plan p) { fftwf_execute(p); }
    static void destroy(plan p) { fftwf_destroy_plan(p); }
};

template <typename T>
class FftwRealFft final : public RealFft<T> {
public:
    FftwRealFft(const std::array<int, 3>& n, int dim) {
        // FFTW is row-major with the last index fastest; reverse the axes.
        int dims[3];
        for (int a = 0; a < dim; ++a) dims[a] = n[dim - 1 - a];
        std::size_t nreal = 1, ncpx = 1;
        for (int a = 0; a < dim; ++a) nreal *= n[a];
        ncpx = nreal / n[0] * (n[0] / 2 + 1);
        real_ = F::alloc_real(nreal);
        cpx_ = F::alloc_complex(ncpx);
        if (!real_ || !cpx_) throw NumericalFailure("fft: allocation failed");
        fwd_ = F::r2c(dim, dims, real_, cpx_);
        inv_ = F::c2r(dim, dims, cpx_, real_);
        if (!fwd_ || !inv_) throw NumericalFailure("fft: planning failed");
    }
    ~FftwRealFft() override {
        if (fwd_) F::destroy(fwd_);
        if (inv_) F::destroy(inv_);
        F::free(real_);
        F::free(cpx_);
    }
    FftwRealFft(const FftwRealFft&) = delete;
    FftwRealFft& operator=(const FftwRealFft&) = delete;

    T* real_data() override { return real_; }
    std::complex<T>* complex_data() override { return reinterpret_cast<std::complex<T>*>(cpx_); }
    void forward() override { F::execute(fwd_); }
    void inverse() override { F::execute(inv_); }

private:
    using F = Fftw<T>;
    T* real_ = nullptr;
    typename F::cpx* cpx_ = nullptr;
    typename F::plan fwd_ = nullptr;
    typename F::plan inv_ = nullptr;
};

template <typename T>
double default_tol() {
    return std::is_same_v<T, float> ? 1e-5 : 1e-10;
}

template <typename T>
void remove_mean(const Grid<T>& g, ScalarField<T>& p) {
    const T m = mean_w(g, p);
    for_box(g, pressure_dofs(g), [&](int, int, int, std::ptrdiff_t idx) { p[idx] -= m; });
}

// Flat interior ordering (axis 0 fastest) <-> storage index.
template <typename T>
std::vector<std::ptrdiff_t> interior_indices(const Grid<T>& g) {
    std::vector<std::ptrdiff_t> out;
    out.reserve(static_cast<std::size_t>(g.n[0]) * g.n[1] * g.n[2]);
    for_box(g, pressure_dofs(g), [&](int, int, int, std::ptrdiff_t idx) { out.push_back(idx); });
    return out;
}

//------------------------------------------------------------------------------
// Spectral
//------------------------------------------------------------------------------

template <typename T>
class SpectralSolver final : public PoissonSolver<T> {
public:
    explicit SpectralSolver(const Grid<T>& g) : PoissonSolver<T>(g) {
        if (!g.all_periodic() || !g.all_uniform())
            throw UnsupportedConfiguration("spectral solver requires a periodic uniform grid");
        fft_ = make_real_fft<T>(g.n, g.dim);
        const int nh = g.n[0] / 2 + 1;
        inv_symbol_.resize(static_cast<std::size_t>(nh) * g.n[1] * g.n[2]);
        std::size_t m = 0;
        for (int k = 0; k < g.n[2]; ++k)
            for (int j = 0; j < g.n[1]; ++j)
                for (int i = 0; i < nh; ++i, ++m) {
                    const std::array<int, 3> kk{i, j, k};
                    double lam = 0;
                    for (int a = 0; a < g.dim; ++a) {
                        const double h = g.axes[a].widths[0];
                        lam -= (2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * kk[a] / g.n[a])) / (h * h);
                    }
                    if (m == 0) lam = 1.0;
                    inv_symbol_[m] = static_cast<T>(1.0 / lam);
                }
        total_ = 1;
        for (int a = 0; a < g.dim; ++a) total_ *= g.n[a];
    }

    PoissonKind kind() const override { return PoissonKind::spectral; }

    void solve(const ScalarField<T>& rhs, ScalarField<T>& p) override {
        const auto& g = this->grid_;
        if (p.size() != g.size()) p = ScalarField<T>(g);
        const T m = mean_w(g, rhs);
        T* buf = fft_->real_data();
        std::size_t n = 0;
        for_box(g, pressure_dofs(g), [&](int, int, int, std::ptrdiff_t idx) { buf[n++] = rhs[idx] - m; });
        fft_->forward();
        std::complex<T>* c = fft_->complex_data();
        for (std::size_t q = 0; q < inv_symbol_.size(); ++q) c[q] *= inv_symbol_[q];
        fft_->inverse();
        const T scale = T(1) / static_cast<T>(total_);
        n = 0;
        p.fill(T(0));
        for_box(g, pressure_dofs(g), [&](int, int, int, std::ptrdiff_t idx) { p[idx] = buf[n++] * scale; });
        remove_mean(g, p);
        fill_ghosts_scalar(g, p);
    }

private:
    std::unique_ptr<RealFft<T>> fft_;
    std::vector<T> inv_symbol_;
    std::size_t total_ = 1;
};

//------------------------------------------------------------------------------
// Direct: LDL^T of [[K, e], [e^T, 0]] with K = -W_p D G, e = W_p 1.
//------------------------------------------------------------------------------

// Colour count along an axis for basis probing: stencil neighbours must differ.
int probe_colors(int n, bool periodic) {
    if (!periodic) return std::min(n, 3);
    for (int c = 3; c <= n; ++c)
        if (n % c == 0) return c;
    return n;
}

template <typename T>
std::vector<Eigen::Triplet<double>> assemble_pressure_matrix(const Grid<T>& g) {
    std::array<int, 3> ncol{1, 1, 1};
    for (int a = 0; a < g.dim; ++a) ncol[a] = probe_colors(g.n[a], g.periodic(a));
    const Box dofs = pressure_dofs(g);
    auto flat = [&](const std::array<int, 3>& I) {
        return (I[0] - g.lo[0]) + g.n[0] * ((I[1] - g.lo[1]) + static_cast<std::ptrdiff_t>(g.n[1]) * (I[2] - g.lo[2]));
    };
    auto color_of = [&](const std::array<int, 3>& I, int a) { return (I[a] - g.lo[a]) % ncol[a]; };

    std::vector<Eigen::Triplet<double>> trip;
    ScalarField<T> x(g), y(g);
    for (int c2 = 0; c2 < ncol[2]; ++c2)
        for (int c1 = 0; c1 < ncol[1]; ++c1)
            for (int c0 = 0; c0 < ncol[0]; ++c0) {
                const std::array<int, 3> col{c0, c1, c2};
                x.fill(T(0));
                for_box(g, dofs, [&](int i, int j, int k, std::ptrdiff_t idx) {
                    const std::array<int, 3> I{i, j, k};
                    if (color_of(I, 0) == c0 && color_of(I, 1) == c1 && color_of(I, 2) == c2) x[idx] = T(1);
                });
                fill_ghosts_scalar(g, x);
                laplacian(g, x, y);
                for_box(g, dofs, [&](int i, int j, int k, std::ptrdiff_t idx) {
                    const std::array<int, 3> I{i, j, k};
                    // Distinct stencil neighbours (wrapped); at most one carries this colour.
                    std::array<std::array<int, 3>, 7> nb;
                    int count = 0;
                    auto add = [&](std::array<int, 3> J) {
                        for (int q = 0; q < count; ++q)
                            if (nb[q] == J) return;
                        nb[count++] = J;
                    };
                    add(I);
                    for (int a = 0; a < g.dim; ++a)
                        for (int s : {-1, 1}) {
                            auto J = I;
                            J[a] += s;
                            if (J[a] < g.lo[a] || J[a] >= g.lo[a] + g.n[a]) {
                                if (!g.periodic(a)) continue;
                                J[a] = J[a] < g.lo[a] ? J[a] + g.n[a] : J[a] - g.n[a];
                            }
                            add(J);
                        }
                    for (int q = 0; q < count; ++q) {
                        const auto& J = nb[q];
                        if (color_of(J, 0) == col[0] && color_of(J, 1) == col[1] && color_of(J, 2) == col[2]) {
                            const double v = -static_cast<double>(g.cell_volume(i, j, k)) * y[idx];
                            if (v != 0.0) trip.emplace_back(static_cast<int>(flat(I)), static_cast<int>(flat(J)), v);
                        }
                    }
                });
            }
    return trip;
}

template <typename T>
class DirectSolver final : public PoissonSolver<T> {
public:
    using SpMat = Eigen::SparseMatrix<T, Eigen::ColMajor, int>;
    using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

    explicit DirectSolver(const Grid<T>& g) : PoissonSolver<T>(g) {
        idx_ = interior_indices(g);
        const int n = static_cast<int>(idx_.size());
        const auto trip = assemble_pressure_matrix(g);

        // Fill-reducing order of K; the multiplier goes just before the last node.
        Eigen::SparseMatrix<double, Eigen::ColMajor, int> K(n, n);
        K.setFromTriplets(trip.begin(), trip.end());
        Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm;
        Eigen::AMDOrdering<int> amd;
        amd(K, perm);
        pos_.resize(n);
        for (int k = 0; k < n; ++k) pos_[perm.indices()[k]] = k < n - 1 ? k : n;
        mult_ = n - 1;

        std::vector<Eigen::Triplet<T>> t;
        t.reserve(trip.size() + 2 * n);
        for (const auto& e : trip) t.emplace_back(pos_[e.row()], pos_[e.col()], static_cast<T>(e.value()));
        vol_.resize(n);
        for (int r = 0; r < n; ++r) {
            const auto I = unflatten(r);
            vol_[r] = g.cell_volume(I[0], I[1], I[2]);
            t.emplace_back(pos_[r], mult_, vol_[r]);
            t.emplace_back(mult_, pos_[r], vol_[r]);
        }
        SpMat M(n + 1, n + 1);
        M.setFromTriplets(t.begin(), t.end());
        ldlt_.compute(M);
        if (ldlt_.info() != Eigen::Success) throw NumericalFailure("direct solver: factorization failed");
        const auto& D = ldlt_.vectorD();
        for (int q = 0; q < D.size(); ++q)
            if (D[q] == T(0) || !std::isfinite(static_cast<double>(D[q])))
                throw NumericalFailure("direct solver: singular pivot");
        work_.resize(n + 1);
    }

    PoissonKind kind() const override { return PoissonKind::direct; }

    void solve(const ScalarField<T>& rhs, ScalarField<T>& p) override {
        const auto& g = this->grid_;
        if (p.size() != g.size()) p = ScalarField<T>(g);
        const int n = static_cast<int>(idx_.size());
        for (int r = 0; r < n; ++r) work_[pos_[r]] = -vol_[r] * rhs[idx_[r]];
        work_[mult_] = T(0);
        ldlt_.matrixL().solveInPlace(work_);
        work_.array() /= ldlt_.vectorD().array();
        ldlt_.matrixU().solveInPlace(work_);
        p.fill(T(0));
        for (int r = 0; r < n; ++r) p[idx_[r]] = work_[pos_[r]];
        remove_mean(g, p);
        fill_ghosts_scalar(g, p);
    }

private:
    std::array<int, 3> unflatten(int r) const {
        const auto& g = this->grid_;
        const int i = r % g.n[0];
        const int j = (r / g.n[0]) % g.n[1];
        const int k = r / (g.n[0] * g.n[1]);
        return {i + g.lo[0], j + g.lo[1], k + g.lo[2]};
    }

    std::vector<std::ptrdiff_t> idx_;
    std::vector<int> pos_;
    std::vector<T> vol_;
    int mult_ = 0;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::NaturalOrdering<int>> ldlt_;
    Vec work_;
};

}  // namespace

//------------------------------------------------------------------------------
// Conjugate gradient on K = -W_p D G
//------------------------------------------------------------------------------

template <typename T>
class CgSolver final : public PoissonSolver<T> {
public:
    CgSolver(const Grid<T>& g, const PoissonOptions& o) : PoissonSolver<T>(g), r_(g), d_(g), q_(g) {
        tol_ = o.tol > 0 ? o.tol : default_tol<T>();
        if (o.max_iter > 0) {
            max_iter_ = o.max_iter;
        } else {
            double pts = 1;
            for (int a = 0; a < g.dim; ++a) pts *= g.n[a];
            max_iter_ = static_cast<int>(std::min(10000.0, std::ceil(10.0 * std::pow(pts, 1.0 / g.dim))));
        }
        history_.reserve(max_iter_ + 1);
    }

    PoissonKind kind() const override { return PoissonKind::cg; }
    int last_iterations() const override { return iterations_; }
    double last_residual() const override { return residual_; }
    double tolerance() const override { return tol_; }
    const std::vector<double>& history() const { return history_; }

    void solve(const ScalarField<T>& rhs, ScalarField<T>& p) override {
        const auto& g = this->grid_;
        if (p.size() != g.size()) p = ScalarField<T>(g);
        const Box dofs = pressure_dofs(g);
        history_.clear();
        iterations_ = 0;
        residual_ = 0;
        const T m = mean_w(g, rhs);
        r_.fill(T(0));
        for_box(g, dofs,
                [&](int i, int j, int k, std::ptrdiff_t idx) { r_[idx] = -g.cell_volume(i, j, k) * (rhs[idx] - m); });
        p.fill(T(0));
        const double bnorm = std::sqrt(static_cast<double>(dot(r_, r_)));
        history_.push_back(bnorm > 0 ? 1.0 : 0.0);
        if (bnorm == 0.0) {
            fill_ghosts_scalar(g, p);
            return;
        }
        d_ = r_;
        T rr = dot(r_, r_);
        for (int it = 1; it <= max_iter_; ++it) {
            apply(d_, q_);
            const T dq = dot(d_, q_);
            if (!(dq > T(0))) throw NumericalFailure("cg: operator not positive on search direction");
            const T alpha = rr / dq;
            for_box(g, dofs, [&](int, int, int, std::ptrdiff_t idx) {
                p[idx] += alpha * d_[idx];
                r_[idx] -= alpha * q_[idx];
            });
            remove_mean(g, p);
            const T rr_new = dot(r_, r_);
            residual_ = std::sqrt(static_cast<double>(rr_new)) / bnorm;
            history_.push_back(residual_);
            iterations_ = it;
            if (residual_ <= tol_) {
                fill_ghosts_scalar(g, p);
                return;
            }
            const T beta = rr_new / rr;
            rr = rr_new;
            for_box(g, dofs, [&](int, int, int, std::ptrdiff_t idx) { d_[idx] = r_[idx] + beta * d_[idx]; });
        }
        fill_ghosts_scalar(g, p);
        throw ConvergenceFailure("cg: no convergence after " + std::to_string(max_iter_) + " iterations", residual_,
                                 iterations_);
    }

private:
    T dot(const ScalarField<T>& a, const ScalarField<T>& b) const {
        T s = 0;
        for_box(this->grid_, pressure_dofs(this->grid_), [&](int, int, int, std::ptrdiff_t idx) { s += a[idx] * b[idx]; });
        return s;
    }

    void apply(ScalarField<T>& x, ScalarField<T>& out) {
        const auto& g = this->grid_;
        fill_ghosts_scalar(g, x);
        laplacian(g, x, out);
        for_box(g, pressure_dofs(g),
                [&](int i, int j, int k, std::ptrdiff_t idx) { out[idx] *= -g.cell_volume(i, j, k); });
    }

    ScalarField<T> r_, d_, q_;
    double tol_ = 1e-10;
    int max_iter_ = 100;
    int iterations_ = 0;
    double residual_ = 0;
    std::vector<double> history_;
};

template <typename T>
std::unique_ptr<RealFft<T>> make_real_fft(const std::array<int, 3>& n, int dim) {
    return std::make_unique<FftwRealFft<T>>(n, dim);
}

template <typename T>
std::unique_ptr<PoissonSolver<T>> make_poisson_solver(const Grid<T>& g, PoissonKind kind, const PoissonOptions& opts) {
    switch (kind) {
        case PoissonKind::spectral: return std::make_unique<SpectralSolver<T>>(g);
        case PoissonKind::direct: return std::make_unique<DirectSolver<T>>(g);
        case PoissonKind::cg: return std::make_unique<CgSolver<T>>(g, opts);
    }
    throw InvalidArgument("unknown poisson solver kind");
}

template <typename T>
const std::vector<double>& cg_residual_history(const PoissonSolver<T>& s) {
    const auto* cg = dynamic_cast<const CgSolver<T>*>(&s);
    if (!cg) throw InvalidArgument("cg_residual_history: solver is not cg");
    return cg->history();
}

template <typename T>
void project(const Grid<T>& g, VelocityField<T>& u, PoissonSolver<T>& solver, T t, ScalarField<T>& p,
             ScalarField<T>& div) {
    divergence(g, u, div);
    solver.solve(div, p);
    for (int a = 0; a < g.dim; ++a) {
        const std::ptrdiff_t s = g.stride[a];
        const auto& h = g.dual[a];
        auto& f = u[a];
        for_box(g, velocity_dofs(g, a), [&](int i, int j, int k, std::ptrdiff_t idx) {
            const int ia = a == 0 ? i : a == 1 ? j : k;
            f[idx] -= (p[idx + s] - p[idx]) / h[ia];
        });
    }
    fill_ghosts_velocity(g, u, t);
}

template <typename T>
std::pair<VelocityField<T>, ScalarField<T>> project(const Grid<T>& g, const VelocityField<T>& u,
                                                    PoissonSolver<T>& solver, T t) {
    VelocityField<T> v = u;
    ScalarField<T> p(g), div(g);
    project(g, v, solver, t, p, div);
    return {std::move(v), std::move(p)};
}

template <typename T>
std::vector<double> dense_pressure_matrix(const Grid<T>& g) {
    const std::size_t n = static_cast<std::size_t>(g.n[0]) * g.n[1] * g.n[2];
    std::vector<double> out(n * n, 0.0);
    for (const auto& e : assemble_pressure_matrix(g)) out[e.row() * n + e.col()] += e.value();
    return out;
}

#define STAGFLOW_INSTANTIATE(T)                                                                                 \
    template class CgSolver<T>;                                                                                \
    template std::unique_ptr<RealFft<T>> make_real_fft<T>(const std::array<int, 3>&, int);                     \
    template std::unique_ptr<PoissonSolver<T>> make_poisson_solver<T>(const Grid<T>&, PoissonKind,             \
                                                                      const PoissonOptions&);                  \
    template const std::vector<double>& cg_residual_history<T>(const PoissonSolver<T>&);                       \
    template void project<T>(const Grid<T>&, VelocityField<T>&, PoissonSolver<T>&, T, ScalarField<T>&,         \
                             ScalarField<T>&);                                                                 \
    template std::pair<VelocityField<T>, ScalarField<T>> project<T>(const Grid<T>&, const VelocityField<T>&,   \
                                                                    PoissonSolver<T>&, T);                     \
    template std::vector<double> dense_pressure_matrix<T>(const Grid<T>&);

STAGFLOW_INSTANTIATE(float)
STAGFLOW_INSTANTIATE(double)

}  // namespace stagflow
