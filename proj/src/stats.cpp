#include "stagflow/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace stagflow {

namespace fs = std::filesystem;

namespace {

fs::path temp_sibling(const fs::path& path) {
    return fs::path(path.string() + ".tmp." + std::to_string(::getpid()));
}

void write_atomic(const fs::path& path, const char* data, std::size_t n) {
    const fs::path tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out.write(data, static_cast<std::streamsize>(n));
        out.flush();
        if (!out) throw IoError("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot rename onto '" + path.string() + "'");
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int wrap(int m, int n) { return m < 1 ? m + n : (m > n ? m - n : m); }

}  // namespace

void write_text_atomic(const fs::path& path, const std::string& content) {
    write_atomic(path, content.data(), content.size());
}

void write_bytes_atomic(const fs::path& path, const std::vector<char>& bytes) {
    write_atomic(path, bytes.data(), bytes.size());
}

double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0;
        for (std::size_t q = 0; q < n; ++q) s += x[q];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

//------------------------------------------------------------------------------
// Channel statistics
//------------------------------------------------------------------------------

namespace {

enum Stat { s_um, s_vm, s_wm, s_uu, s_vv, s_ww, s_uuu, s_uuuu, s_uuv, s_uv, s_uw, s_nut };

}  // namespace

template <typename T>
ChannelStatistics<T>::ChannelStatistics(const Grid<T>& g, double nu) : g_(g), nu_(nu) {
    if (g.dim < 2 || g.periodic(1) || !g.periodic(0) || (g.dim == 3 && !g.periodic(2)))
        throw UnsupportedConfiguration("channel statistics need walls normal to y and periodic x, z");
    plane_.resize(static_cast<std::size_t>(g.n[0]) * g.n[2]);
}

template <typename T>
void ChannelStatistics<T>::add(const VelocityField<T>& u, const ScalarField<T>* nu_t) {
    const auto& g = g_;
    const int nx = g.n[0], ny = g.n[1], nz = g.n[2];
    const int dim = g.dim;
    double area = 0;
    for (int k = 1; k <= nz; ++k)
        for (int i = 1; i <= nx; ++i) area += double(g.width[0][i]) * double(g.width[2][k]);

    auto plane_avg = [&](auto&& f) {
        std::size_t q = 0;
        for (int k = 1; k <= nz; ++k)
            for (int i = 1; i <= nx; ++i)
                plane_[q++] = f(i, k) * double(g.width[0][i]) * double(g.width[2][k]);
        return pairwise_sum(plane_.data(), plane_.size()) / area;
    };
    auto val = [&](int c, int i, int j, int k) { return double(u[c].at(i, j, k)); };

    // Plane means at native locations; v lives on faces 0..ny with the walls at 0 and ny.
    std::vector<double> um(ny + 1, 0.0), vm(ny + 1, 0.0), wm(ny + 1, 0.0);
    for (int j = 1; j <= ny; ++j) {
        um[j] = plane_avg([&](int i, int k) { return val(0, i, j, k); });
        if (dim == 3) wm[j] = plane_avg([&](int i, int k) { return val(2, i, j, k); });
    }
    for (int j = 1; j < ny; ++j) vm[j] = plane_avg([&](int i, int k) { return val(1, i, j, k); });

    auto uf = [&](int i, int j, int k) {
        return ((val(0, wrap(i - 1, nx), j, k) - um[j]) + (val(0, i, j, k) - um[j])) / 2;
    };
    auto vface = [&](int i, int j, int k) { return (j == 0 || j == ny) ? 0.0 : val(1, i, j, k) - vm[j]; };
    auto vf = [&](int i, int j, int k) { return (vface(i, j - 1, k) + vface(i, j, k)) / 2; };
    auto wf = [&](int i, int j, int k) {
        if (dim < 3) return 0.0;
        return ((val(2, i, j, wrap(k - 1, nz)) - wm[j]) + (val(2, i, j, k) - wm[j])) / 2;
    };

    std::vector<double> rec(static_cast<std::size_t>(n_stats) * ny);
    for (int j = 1; j <= ny; ++j) {
        double* r = rec.data() + static_cast<std::size_t>(j - 1) * n_stats;
        r[s_um] = um[j];
        r[s_vm] = (vm[j - 1] + vm[j]) / 2;
        r[s_wm] = wm[j];
        r[s_uu] = plane_avg([&](int i, int k) { const double a = uf(i, j, k); return a * a; });
        r[s_vv] = plane_avg([&](int i, int k) { const double a = vf(i, j, k); return a * a; });
        r[s_ww] = plane_avg([&](int i, int k) { const double a = wf(i, j, k); return a * a; });
        r[s_uuu] = plane_avg([&](int i, int k) { const double a = uf(i, j, k); return a * a * a; });
        r[s_uuuu] = plane_avg([&](int i, int k) { const double a = uf(i, j, k); return a * a * a * a; });
        r[s_uuv] = plane_avg([&](int i, int k) { const double a = uf(i, j, k); return a * a * vf(i, j, k); });
        r[s_uv] = plane_avg([&](int i, int k) { return uf(i, j, k) * vf(i, j, k); });
        r[s_uw] = plane_avg([&](int i, int k) { return uf(i, j, k) * wf(i, j, k); });
        r[s_nut] = nu_t ? plane_avg([&](int i, int k) { return double(nu_t->at(i, j, k)); }) : 0.0;
    }
    snapshots_.push_back(std::move(rec));
}

template <typename T>
StatProfile ChannelStatistics<T>::finalize() const {
    if (snapshots_.size() < 2) throw InvalidArgument("channel statistics need at least two snapshots");
    const int ny = g_.n[1];
    const std::size_t ns = snapshots_.size();
    std::vector<double> avg(static_cast<std::size_t>(n_stats) * ny);
    std::vector<double> col(ns);
    for (std::size_t e = 0; e < avg.size(); ++e) {
        for (std::size_t s = 0; s < ns; ++s) col[s] = snapshots_[s][e];
        // Sorting first makes the result independent of snapshot order.
        std::sort(col.begin(), col.end());
        avg[e] = pairwise_sum(col.data(), ns) / double(ns);
    }
    auto at = [&](int j, int s) { return avg[static_cast<std::size_t>(j) * n_stats + s]; };

    StatProfile p;
    p.nu = nu_;
    p.samples = static_cast<long>(ns);
    const double H = double(g_.axes[1].boundaries.back());
    const double y0 = double(g_.axes[1].boundaries.front());
    // Wall shear from the first off-wall mean at each wall.
    const double y1 = double(g_.center[1][1]) - y0, yN = H - double(g_.center[1][ny]);
    const double dudy = (at(0, s_um) / y1 + at(ny - 1, s_um) / yN) / 2;
    p.u_tau = std::sqrt(std::max(nu_ * dudy, 0.0));
    for (int j = 0; j < ny; ++j) {
        const double y = double(g_.center[1][j + 1]);
        p.y.push_back(y);
        p.yplus.push_back(std::min(y - y0, H - y) * p.u_tau / nu_);
        for (int c = 0; c < 3; ++c) {
            p.mean[c].push_back(at(j, s_um + c));
            p.rms[c].push_back(std::sqrt(std::max(at(j, s_uu + c), 0.0)));
        }
        p.uuu.push_back(at(j, s_uuu));
        p.uuuu.push_back(at(j, s_uuuu));
        p.uuv.push_back(at(j, s_uuv));
        p.uv.push_back(at(j, s_uv));
        p.uw.push_back(at(j, s_uw));
        p.nut_over_nu.push_back(at(j, s_nut) / nu_);
    }
    return p;
}

std::string profile_csv(const StatProfile& p) {
    std::ostringstream os;
    os << "# stagflow channel-profile v1 u_tau=" << fmt(p.u_tau) << " nu=" << fmt(p.nu) << " samples=" << p.samples
       << "\n";
    os << "y,yplus,u_mean,v_mean,w_mean,u_rms,v_rms,w_rms,uuu,uuuu,uuv,uv,uw,nut_over_nu\n";
    for (std::size_t j = 0; j < p.y.size(); ++j) {
        const double row[] = {p.y[j],       p.yplus[j],   p.mean[0][j], p.mean[1][j], p.mean[2][j],
                              p.rms[0][j],  p.rms[1][j],  p.rms[2][j],  p.uuu[j],     p.uuuu[j],
                              p.uuv[j],     p.uv[j],      p.uw[j],      p.nut_over_nu[j]};
        for (std::size_t q = 0; q < std::size(row); ++q) os << (q ? "," : "") << fmt(row[q]);
        os << "\n";
    }
    return os.str();
}

void write_profile_csv(const fs::path& path, const StatProfile& p) { write_text_atomic(path, profile_csv(p)); }

//------------------------------------------------------------------------------
// Snapshots
//------------------------------------------------------------------------------

template <typename T>
void write_snapshot(const fs::path& path, const Grid<T>& g, const VelocityField<T>& u, T t) {
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    std::vector<char> bytes;
    bytes.reserve(sizeof(T) * g.dim * g.n[0] * g.n[1] * g.n[2]);
    for (int c = 0; c < g.dim; ++c)
        for_box(g, pressure_dofs(g), [&](int, int, int, std::ptrdiff_t idx) {
            char b[sizeof(T)];
            std::memcpy(b, &u[c][idx], sizeof(T));
            if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
            bytes.insert(bytes.end(), b, b + sizeof(T));
        });
    std::ostringstream hdr;
    hdr << "stagflow-snapshot 1\n"
        << "dims " << g.n[0] << " " << g.n[1] << " " << g.n[2] << "\n"
        << "components " << g.dim << "\n"
        << "dtype " << (sizeof(T) == 8 ? "float64" : "float32") << "\n"
        << "endian little\n"
        << "time " << fmt(double(t)) << "\n"
        << "layout component-major x-fastest; component c sits on the faces normal to axis c\n";
    write_bytes_atomic(path, bytes);
    write_text_atomic(fs::path(path.string() + ".hdr"), hdr.str());
}

SnapshotData read_snapshot(const fs::path& path) {
    SnapshotData s;
    std::ifstream h(fs::path(path.string() + ".hdr"));
    if (!h) throw IoError("cannot open header for '" + path.string() + "'");
    std::string key;
    while (h >> key) {
        if (key == "dims")
            h >> s.dims[0] >> s.dims[1] >> s.dims[2];
        else if (key == "components")
            h >> s.components;
        else if (key == "dtype")
            h >> s.dtype;
        else if (key == "time")
            h >> s.time;
        std::string rest;
        std::getline(h, rest);
    }
    const std::size_t width = s.dtype == "float64" ? 8 : s.dtype == "float32" ? 4 : 0;
    if (width == 0 || s.components < 1) throw IoError("malformed snapshot header for '" + path.string() + "'");
    const std::size_t n = static_cast<std::size_t>(s.components) * s.dims[0] * s.dims[1] * s.dims[2];
    std::ifstream in(path, std::ios::binary);
    std::vector<char> raw(n * width);
    if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size())))
        throw IoError("snapshot '" + path.string() + "' is truncated");
    s.values.resize(n);
    for (std::size_t q = 0; q < n; ++q) {
        char b[8];
        std::memcpy(b, raw.data() + q * width, width);
        if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + width);
        if (width == 8) {
            std::memcpy(&s.values[q], b, 8);
        } else {
            float f;
            std::memcpy(&f, b, 4);
            s.values[q] = f;
        }
    }
    return s;
}

template class ChannelStatistics<float>;
template class ChannelStatistics<double>;
template void write_snapshot<float>(const fs::path&, const Grid<float>&, const VelocityField<float>&, float);
template void write_snapshot<double>(const fs::path&, const Grid<double>&, const VelocityField<double>&, double);

}  // namespace stagflow
