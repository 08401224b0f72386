#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "isac/model.hpp"

namespace isac {

// Received OFDM symbols after CP removal, one M_R × N matrix per symbol of the pool.
struct OfdmaFrameSet {
    std::vector<MatrixXcd> frames;
    DataGrid data;
    std::uint64_t rng_seed = 0;
};

struct SynthesisOptions {
    bool allow_overlap = false; // permit shared subcarriers (negative compensation tests)
    bool add_noise = true;      // AWGN with per-RE power config.noise_power
};

// Path coefficient seen by receive antenna m (0-based) after compensation:
// ᾱ e^{−j2π f_c (2v/c) T_c} e^{jmΩ_r} a_t^T(Ω_t) ϖ.
cd path_beta(const SystemConfig& cfg, const UeChannel& channel, const ChannelPath& path, Index m);

// Per-sample noise power that yields per-RE power `noise_power` after the unscaled DFT.
inline double time_domain_noise_power(const SystemConfig& cfg)
{
    return cfg.noise_power / static_cast<double>(cfg.n_subcarriers);
}

// Frequency-domain content of symbol t (0-based) before the inverse DFT.
MatrixXcd frame_spectrum(const SystemConfig& cfg, std::span<const UeChannel> channels,
                         std::span<const ResourceAssignment> assignments, const DataGrid& data,
                         Index t);

// Y_t for every symbol t of the pool (approximate slow-time Doppler model), inverse DFT
// with 1/N scaling, plus seeded AWGN.
OfdmaFrameSet synthesize_frames(const SystemConfig& cfg, std::span<const UeChannel> channels,
                                std::span<const ResourceAssignment> assignments,
                                const DataGrid& data, std::uint64_t seed,
                                const SynthesisOptions& options = {});

// Adds circular complex Gaussian noise of variance `noise_power` per sample. Each
// (symbol, antenna) row draws from its own derived stream.
void add_awgn(std::vector<MatrixXcd>& frames, double noise_power, std::uint64_t seed);

// Row-wise inverse DFT with 1/N scaling (the F_N convention).
MatrixXcd inverse_dft_rows(const MatrixXcd& spectrum);

// Row-wise unscaled forward DFT (Y F_N^{-1}).
MatrixXcd demodulate(const MatrixXcd& frame);

} // namespace isac
