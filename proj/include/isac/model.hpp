#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "isac/errors.hpp"

namespace isac {

using cd = std::complex<double>;
using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double speed_of_light = 2.99792458e8;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// OFDMA numerology and array geometry shared by every module.
struct SystemConfig {
    int n_subcarriers = 48;            // N
    double subcarrier_spacing = 100e3; // Δf [Hz]
    double carrier_freq = 28e9;        // f_c [Hz]
    double symbol_duration = 1.0 / 90e3;
    double cp_duration = 1.0 / 900e3;
    double sample_duration = 1.0 / (48 * 100e3);
    int n_rx_antennas = 8;
    int n_tx_antennas = 2;
    int n_ues = 3;
    int n_symbols = 48; // G
    double antenna_spacing = 0.5 * speed_of_light / 28e9;
    double noise_power = 1.0; // per resource element, frequency domain
    double c = speed_of_light;

    double wavelength() const { return c / carrier_freq; }

    // Builds a consistent configuration: T_sam = 1/(NΔf), T_s = T_c + N T_sam.
    static SystemConfig make(int n_subcarriers, double subcarrier_spacing, double carrier_freq,
                             double cp_fraction, int n_rx, int n_tx, int n_ues, int n_symbols);

    // Throws ConfigError on any broken invariant.
    void validate() const;
};

struct ResourceAssignment {
    int ue_index = 1;             // k, 1-based
    std::vector<int> subcarriers; // ζ_k, 1-based
    std::vector<int> symbols;     // ψ_k, 1-based

    Index n_sub() const { return static_cast<Index>(subcarriers.size()); }
    Index n_sym() const { return static_cast<Index>(symbols.size()); }

    // Throws AssignmentError for duplicates or indices outside [1, n_total] / [1, g_total].
    void validate(int n_total, int g_total) const;
};

struct ChannelPath {
    cd gain{1.0, 0.0};            // α
    double delay = 0.0;           // τ [s]
    double radial_velocity = 0.0; // v [m/s]
    double aoa = 0.0;             // θ^r [rad]
    double aod = 0.0;             // θ^t [rad]

    double doppler_ratio(double c = speed_of_light) const { return 2.0 * radial_velocity / c; }
    double range(double c = speed_of_light) const { return c * delay; }
    void validate() const;
};

struct UeChannel {
    std::vector<ChannelPath> paths;
    VectorXcd beamformer; // ϖ_k, unit norm

    void validate(int n_tx) const;
};

// Unit-norm beamformer (1/√M)·[1, …, 1].
VectorXcd uniform_beamformer(int n_tx);

// Per-UE data: symbols[k] is G × N_k, row t holds s_{t,k} for OFDM symbol t (0-based).
struct DataGrid {
    std::vector<MatrixXcd> symbols;
};

// Unit-modulus QPSK drawn from a seeded engine, one G × N_k block per assignment.
DataGrid random_qpsk_grid(std::span<const ResourceAssignment> assignments, int n_symbols,
                          std::uint64_t seed);

// a(Ω) = [1, e^{jΩ}, …, e^{j(M−1)Ω}]^T
template <typename Real>
Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1> steering_vector(Real omega, Index n_elements)
{
    Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1> a(n_elements);
    for (Index i = 0; i < n_elements; ++i)
        a(i) = std::polar(Real(1), omega * static_cast<Real>(i));
    return a;
}

// Ω = 2π d cos(θ) / λ
inline double spatial_phase(double angle, double spacing, double wavelength)
{
    return two_pi * spacing * std::cos(angle) / wavelength;
}

// Γ_k: N_k × N with Γ[i, ζ[i]−1] = 1.
MatrixXd selection_matrix(const ResourceAssignment& assignment, int n_total);

// Population variance (1/n)Σx² − (1/n²)(Σx)².
template <typename T>
double index_variance(std::span<const T> indices)
{
    if (indices.empty())
        throw DomainError("index_variance: empty index list");
    const double n = static_cast<double>(indices.size());
    double mean = 0.0;
    for (T x : indices)
        mean += static_cast<double>(x);
    mean /= n;
    double ss = 0.0;
    for (T x : indices) {
        const double d = static_cast<double>(x) - mean;
        ss += d * d;
    }
    return ss / n;
}

inline double index_variance(const std::vector<int>& indices)
{
    return index_variance(std::span<const int>(indices));
}

// n²·variance as an exact integer: n Σx² − (Σx)².
std::int64_t scaled_index_variance(std::span<const int> indices);

// True when no subcarrier is shared by two assignments.
bool subcarriers_disjoint(std::span<const ResourceAssignment> assignments);

} // namespace isac
