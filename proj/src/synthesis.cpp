#include "isac/synthesis.hpp"

#include <random>

#include <unsupported/Eigen/FFT>

#include "isac/rng.hpp"

namespace isac {

namespace {

enum class Direction { inverse_scaled, forward_unscaled };

MatrixXcd dft_rows(const MatrixXcd& in, Direction dir)
{
    Eigen::FFT<double> fft;
    MatrixXcd out(in.rows(), in.cols());
    VectorXcd row(in.cols());
    VectorXcd res(in.cols());
    for (Index r = 0; r < in.rows(); ++r) {
        row = in.row(r).transpose();
        if (dir == Direction::inverse_scaled)
            fft.inv(res, row);
        else
            fft.fwd(res, row);
        out.row(r) = res.transpose();
    }
    return out;
}

} // namespace

MatrixXcd inverse_dft_rows(const MatrixXcd& spectrum)
{
    return dft_rows(spectrum, Direction::inverse_scaled);
}

MatrixXcd demodulate(const MatrixXcd& frame)
{
    return dft_rows(frame, Direction::forward_unscaled);
}

cd path_beta(const SystemConfig& cfg, const UeChannel& channel, const ChannelPath& path, Index m)
{
    const double eps = path.doppler_ratio(cfg.c);
    const double omega_r = spatial_phase(path.aoa, cfg.antenna_spacing, cfg.wavelength());
    const double omega_t = spatial_phase(path.aod, cfg.antenna_spacing, cfg.wavelength());
    const cd alpha_bar = path.gain * std::polar(1.0, -two_pi * cfg.carrier_freq * path.delay * (1.0 - eps));
    const cd cp_phase = std::polar(1.0, -two_pi * cfg.carrier_freq * eps * cfg.cp_duration);
    const cd tx_gain = steering_vector(omega_t, cfg.n_tx_antennas).transpose() * channel.beamformer;
    return alpha_bar * cp_phase * std::polar(1.0, omega_r * static_cast<double>(m)) * tx_gain;
}

MatrixXcd frame_spectrum(const SystemConfig& cfg, std::span<const UeChannel> channels,
                         std::span<const ResourceAssignment> assignments, const DataGrid& data,
                         Index t)
{
    const Index n = cfg.n_subcarriers;
    const Index mr = cfg.n_rx_antennas;
    MatrixXcd x = MatrixXcd::Zero(mr, n);
    for (std::size_t k = 0; k < assignments.size(); ++k) {
        const auto& asg = assignments[k];
        const auto& ch = channels[k];
        const auto& s = data.symbols[k];
        for (const auto& path : ch.paths) {
            const double eps = path.doppler_ratio(cfg.c);
            // slow-time phase of symbol t; t is the 0-based position in the pool
            const double slow = two_pi * cfg.carrier_freq * eps * static_cast<double>(t) * cfg.symbol_duration;
            VectorXcd rx(mr);
            for (Index m = 0; m < mr; ++m)
                rx(m) = path_beta(cfg, ch, path, m) * std::polar(1.0, -slow);
            for (Index i = 0; i < asg.n_sub(); ++i) {
                const int zeta = asg.subcarriers[static_cast<std::size_t>(i)];
                const cd tau_phase = std::polar(1.0, -two_pi * zeta * cfg.subcarrier_spacing * path.delay);
                // subcarrier ζ occupies DFT bin ζ − 1
                x.col(zeta - 1) += rx * (tau_phase * s(t, i));
            }
        }
    }
    return x;
}

OfdmaFrameSet synthesize_frames(const SystemConfig& cfg, std::span<const UeChannel> channels,
                                std::span<const ResourceAssignment> assignments,
                                const DataGrid& data, std::uint64_t seed,
                                const SynthesisOptions& options)
{
    if (channels.size() != assignments.size() || data.symbols.size() != assignments.size())
        throw DimensionError("synthesize_frames: channels, assignments and data differ in UE count");
    for (std::size_t k = 0; k < assignments.size(); ++k) {
        assignments[k].validate(cfg.n_subcarriers, cfg.n_symbols);
        if (data.symbols[k].rows() != cfg.n_symbols || data.symbols[k].cols() != assignments[k].n_sub())
            throw DimensionError("synthesize_frames: data block shape != G x N_k");
        if (channels[k].beamformer.size() != cfg.n_tx_antennas)
            throw DimensionError("synthesize_frames: beamformer length != n_tx_antennas");
    }
    if (!options.allow_overlap && !subcarriers_disjoint(assignments))
        throw OverlapError("synthesize_frames: assignments share subcarriers");

    OfdmaFrameSet out;
    out.data = data;
    out.rng_seed = seed;
    out.frames.reserve(static_cast<std::size_t>(cfg.n_symbols));
    for (Index t = 0; t < cfg.n_symbols; ++t)
        out.frames.push_back(inverse_dft_rows(frame_spectrum(cfg, channels, assignments, data, t)));
    if (options.add_noise && cfg.noise_power > 0)
        add_awgn(out.frames, time_domain_noise_power(cfg), seed);
    return out;
}

void add_awgn(std::vector<MatrixXcd>& frames, double noise_power, std::uint64_t seed)
{
    if (!(noise_power >= 0))
        throw DomainError("add_awgn: noise_power must be >= 0");
    if (noise_power == 0)
        return;
    const double sigma = std::sqrt(noise_power / 2.0);
    for (std::size_t g = 0; g < frames.size(); ++g) {
        auto& f = frames[g];
        for (Index m = 0; m < f.rows(); ++m) {
            std::mt19937_64 rng(derive_seed(seed, {g, static_cast<std::uint64_t>(m)}));
            std::normal_distribution<double> normal(0.0, sigma);
            for (Index p = 0; p < f.cols(); ++p) {
                const double re = normal(rng);
                const double im = normal(rng);
                f(m, p) += cd(re, im);
            }
        }
    }
}

} // namespace isac
