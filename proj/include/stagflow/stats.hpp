#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "stagflow/fields.hpp"

namespace stagflow {

/// Writes to a temporary sibling and renames it over path.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);
void write_bytes_atomic(const std::filesystem::path& path, const std::vector<char>& bytes);

/// Sum with pairwise recursion; rounding error grows as log n.
double pairwise_sum(const double* x, std::size_t n);

/// Wall-normal profiles at pressure levels, averaged over x, z and snapshots.
struct StatProfile {
    double nu = 0;
    double u_tau = 0;
    long samples = 0;
    std::vector<double> y, yplus;
    std::array<std::vector<double>, 3> mean, rms;
    std::vector<double> uuu, uuuu, uuv, uv, uw;
    std::vector<double> nut_over_nu;
};

/// Accumulates plane statistics of channel snapshots (x, z homogeneous,
/// walls normal to y). Fluctuations are taken against the snapshot's plane
/// mean at each component's own location, then interpolated to centres.
template <typename T>
class ChannelStatistics {
public:
    ChannelStatistics(const Grid<T>& g, double nu);

    void add(const VelocityField<T>& u, const ScalarField<T>* nu_t = nullptr);
    long count() const { return static_cast<long>(snapshots_.size()); }
    /// Needs at least two snapshots. Independent of the order of add calls.
    StatProfile finalize() const;

    static constexpr int n_stats = 12;

private:
    Grid<T> g_;
    double nu_;
    std::vector<std::vector<double>> snapshots_;  // n_stats x ny per snapshot
    std::vector<double> plane_;                    // scratch
};

std::string profile_csv(const StatProfile& p);
void write_profile_csv(const std::filesystem::path& path, const StatProfile& p);

/// Raw little-endian interior velocities, component-major, x fastest, over
/// the pressure index box; sidecar text header at path + ".hdr".
template <typename T>
void write_snapshot(const std::filesystem::path& path, const Grid<T>& g, const VelocityField<T>& u, T t);

struct SnapshotData {
    std::array<int, 3> dims{1, 1, 1};
    int components = 0;
    std::string dtype;
    double time = 0;
    std::vector<double> values;
};
SnapshotData read_snapshot(const std::filesystem::path& path);

}  // namespace stagflow
