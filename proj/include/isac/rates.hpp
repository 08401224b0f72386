#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "isac/model.hpp"

namespace isac {

// Frequency-domain response of a Doppler-perturbed path: row n1 is the spread of
// subcarrier n1 over all subcarriers n2 (both 1-based in the formulas, 0-based here).
struct IciMatrix {
    MatrixXcd values;
    ChannelPath path;

    // max |Q̃[n1, n2]| over n1 ≠ n2
    double max_offdiagonal() const;
    // max |Q̃ − diag(e^{−j2π(n−1)Δf τ})|, the distance from the zero-Doppler matrix
    double distance_from_phase_diagonal(const SystemConfig& cfg) const;
};

// Closed form through the Dirichlet kernel; stable for any Doppler.
IciMatrix ici_matrix(const ChannelPath& path, const SystemConfig& cfg);

// Direct N-term summation for every entry (test oracle, O(N³)).
IciMatrix ici_matrix_direct(const ChannelPath& path, const SystemConfig& cfg);

// Single entry Q̃[n1, n2] (1-based) by the closed form.
cd ici_entry(const ChannelPath& path, const SystemConfig& cfg, int n1, int n2);

// Sample-exact received samples of one symbol: x[p] = Σ_n s[n] q_p[n], p = 1..N, with
// q_p[n] = e^{−j2π(n−1)Δf[(2v/c − 1)(p−1)T_sam + τ]}.
VectorXcd sample_exact_symbol(const ChannelPath& path, const SystemConfig& cfg,
                              const VectorXcd& subcarrier_data);

// Forward DFT with 1/N scaling, so that demodulating sample_exact_symbol gives s^T Q̃.
VectorXcd demodulate_exact(const VectorXcd& samples);

// h = α a(Ω_r) a^T(Ω_t) ϖ
VectorXcd path_response(const SystemConfig& cfg, const UeChannel& channel, const ChannelPath& path);

struct RateOptions {
    int ici_draws = 100;
    std::uint64_t seed = 0;
};

struct RateReport {
    MatrixXd rates;          // G × N, bits/s/Hz, ICI included; 0 on unassigned subcarriers
    MatrixXd approx_rates;   // same with ICI dropped
    VectorXd ici_power;      // per subcarrier, per antenna
    VectorXd inp_power;      // ici_power + noise_power
    double noise_power = 0.0;
    std::vector<int> owner;  // UE position per subcarrier, −1 when unassigned

    double sum_rate() const;        // mean over symbols of Σ_n rates
    double approx_sum_rate() const;
    std::vector<double> ue_rates() const; // mean over symbols, per UE
};

// ICI power on every subcarrier, averaged over receive antennas and `draws` QPSK data
// realisations. The draw schedule depends only on (seed, draw), never on the symbol.
VectorXd ici_power_profile(const SystemConfig& cfg, std::span<const UeChannel> channels,
                           std::span<const ResourceAssignment> assignments, int draws,
                           std::uint64_t seed);

// Same quantity for subcarrier n (1-based).
double ici_power(const SystemConfig& cfg, std::span<const UeChannel> channels,
                 std::span<const ResourceAssignment> assignments, int n, int draws,
                 std::uint64_t seed);

// Expected ICI power for unit-modulus i.i.d. data; closed form used to check the Monte Carlo.
VectorXd ici_power_expected(const SystemConfig& cfg, std::span<const UeChannel> channels,
                            std::span<const ResourceAssignment> assignments);

RateReport achievable_rates(const SystemConfig& cfg, std::span<const UeChannel> channels,
                            std::span<const ResourceAssignment> assignments, const DataGrid& data,
                            const RateOptions& options = {});

} // namespace isac
