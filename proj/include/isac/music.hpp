#pragma once

#include <span>
#include <vector>

#include "isac/compensation.hpp"
#include "isac/model.hpp"

namespace isac {

struct GridAxis {
    double min = 0.0;
    double max = 0.0;
    double step = 1.0;

    Index size() const;
    double at(Index i) const { return min + step * static_cast<double>(i); }
    bool contains(double x) const { return x >= min && x <= max; }
};

enum class Smoothing { automatic, on, off };

struct MusicConfig {
    GridAxis range{0.0, 200.0, 1.0};      // m
    GridAxis velocity{-60.0, 60.0, 0.5};  // m/s
    int n_sources = 1;                    // L̂
    Smoothing smoothing = Smoothing::automatic; // on only for uniform index lattices
    int freq_sub = 0;                     // subarray size along ζ, 0 = N_k − L̂
    int time_sub = 0;                     // subarray size along ψ, 0 = G_k − L̂
    double diagonal_loading = 1e-6;       // × trace, unsmoothed covariance only
    int refine_iterations = 40;

    void validate() const;
};

struct Estimate {
    double range = 0.0;
    double velocity = 0.0;
    double peak = 0.0;
};

struct EstimateSet {
    std::vector<Estimate> pairs; // descending peak value
    bool resolved = false;
};

// Snapshot geometry: the index lattice the steering vector lives on and how many
// subarrays are taken along each axis.
struct SnapshotLayout {
    std::vector<int> zeta; // subarray subcarrier indices
    std::vector<int> psi;  // subarray symbol indices
    Index freq_shifts = 1;
    Index time_shifts = 1;
    bool smoothed = false;

    Index dim() const { return static_cast<Index>(zeta.size() * psi.size()); }
};

bool uniform_lattice(std::span<const int> indices);

SnapshotLayout snapshot_layout(const ResourceAssignment& assignment, const MusicConfig& config);

// D × S matrix of snapshot columns, scaled by 1/√S so that Y Y^H is the sample covariance.
MatrixXcd snapshot_matrix(std::span<const CsiBlock> csi, const SnapshotLayout& layout);

// Average of snapshot outer products, diagonally loaded when no smoothing is applied.
MatrixXcd sample_covariance(std::span<const CsiBlock> csi, const ResourceAssignment& assignment,
                            const MusicConfig& config);

// Orthonormal basis of the L̂ dominant eigenvectors, computed from the S × S snapshot
// Gram matrix when S < D.
MatrixXcd signal_subspace(const MatrixXcd& snapshots, int n_sources);

// Noise subspace of a covariance matrix (eigenvectors beyond the L̂ largest).
MatrixXcd noise_subspace(const MatrixXcd& covariance, int n_sources);

// a(τ, 2v/c) on the layout's lattice, entry g·|ζ| + n.
VectorXcd lattice_steering(const SystemConfig& cfg, const SnapshotLayout& layout, double delay,
                           double doppler_ratio);

// 1 / (a^H U_n U_n^H a); +inf when the denominator vanishes.
double music_spectrum(const MatrixXcd& covariance, const SystemConfig& cfg,
                      const SnapshotLayout& layout, double delay, double doppler_ratio,
                      int n_sources);

// Same spectrum through the signal subspace: 1 / (‖a‖² − ‖U_s^H a‖²).
double music_spectrum_signal(const MatrixXcd& signal, const SystemConfig& cfg,
                             const SnapshotLayout& layout, double delay, double doppler_ratio);

// Spectrum over the whole grid, velocity along rows and range along columns.
MatrixXd spectrum_grid(const MatrixXcd& signal, const SystemConfig& cfg,
                       const SnapshotLayout& layout, const MusicConfig& config);

EstimateSet estimate(const SystemConfig& cfg, std::span<const CsiBlock> csi,
                     const ResourceAssignment& assignment, const MusicConfig& config);

} // namespace isac
