#include "isac/rates.hpp"

#include <random>

#include <unsupported/Eigen/FFT>

#include "isac/rng.hpp"

namespace isac {

double IciMatrix::max_offdiagonal() const
{
    double m = 0.0;
    for (Index j = 0; j < values.cols(); ++j)
        for (Index i = 0; i < values.rows(); ++i)
            if (i != j)
                m = std::max(m, std::abs(values(i, j)));
    return m;
}

double IciMatrix::distance_from_phase_diagonal(const SystemConfig& cfg) const
{
    MatrixXcd d = values;
    for (Index n = 0; n < d.rows(); ++n)
        d(n, n) -= std::polar(1.0, -two_pi * static_cast<double>(n) * cfg.subcarrier_spacing * path.delay);
    return d.cwiseAbs().maxCoeff();
}

cd ici_entry(const ChannelPath& path, const SystemConfig& cfg, int n1, int n2)
{
    const int n = cfg.n_subcarriers;
    const double eps = path.doppler_ratio(cfg.c);
    const int k = n1 - n2;
    const double delta = eps * (1.0 - n1);
    const double x = k + delta;
    const cd lead = std::polar(1.0, -two_pi * (n1 - 1) * cfg.subcarrier_spacing * path.delay) / static_cast<double>(n);
    // Σ_{p=0}^{N−1} e^{j2πxp/N} = e^{jπ(N−1)x/N} sin(πx) / sin(πx/N), sin(πx) = (−1)^k sin(πδ)
    const double den = std::sin(std::numbers::pi * x / n);
    if (std::abs(den) < 1e-300)
        return lead * static_cast<double>(n);
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const double mag = sign * std::sin(std::numbers::pi * delta) / den;
    return lead * std::polar(mag, std::numbers::pi * (n - 1) * x / n);
}

IciMatrix ici_matrix(const ChannelPath& path, const SystemConfig& cfg)
{
    const int n = cfg.n_subcarriers;
    IciMatrix q{MatrixXcd(n, n), path};
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            q.values(i, j) = ici_entry(path, cfg, i + 1, j + 1);
    return q;
}

IciMatrix ici_matrix_direct(const ChannelPath& path, const SystemConfig& cfg)
{
    const int n = cfg.n_subcarriers;
    const double eps = path.doppler_ratio(cfg.c);
    IciMatrix q{MatrixXcd::Zero(n, n), path};
    for (int n1 = 1; n1 <= n; ++n1)
        for (int n2 = 1; n2 <= n; ++n2) {
            cd sum = 0.0;
            for (int p = 1; p <= n; ++p) {
                const double phase = (n1 - 1) * cfg.subcarrier_spacing *
                                         ((eps - 1.0) * (p - 1) * cfg.sample_duration + path.delay) +
                                     static_cast<double>((n2 - 1) * (p - 1)) / n;
                sum += std::polar(1.0, -two_pi * phase);
            }
            q.values(n1 - 1, n2 - 1) = sum / static_cast<double>(n);
        }
    return q;
}

VectorXcd sample_exact_symbol(const ChannelPath& path, const SystemConfig& cfg,
                              const VectorXcd& subcarrier_data)
{
    const int n = cfg.n_subcarriers;
    if (subcarrier_data.size() != n)
        throw DimensionError("sample_exact_symbol: data length != N");
    const double eps = path.doppler_ratio(cfg.c);
    VectorXcd x = VectorXcd::Zero(n);
    for (int p = 1; p <= n; ++p)
        for (int k = 1; k <= n; ++k) {
            const double phase = (k - 1) * cfg.subcarrier_spacing *
                                 ((eps - 1.0) * (p - 1) * cfg.sample_duration + path.delay);
            x(p - 1) += subcarrier_data(k - 1) * std::polar(1.0, -two_pi * phase);
        }
    return x;
}

VectorXcd demodulate_exact(const VectorXcd& samples)
{
    Eigen::FFT<double> fft;
    VectorXcd out;
    fft.fwd(out, samples);
    return out / static_cast<double>(samples.size());
}

VectorXcd path_response(const SystemConfig& cfg, const UeChannel& channel, const ChannelPath& path)
{
    const double lambda = cfg.wavelength();
    const VectorXcd ar = steering_vector(spatial_phase(path.aoa, cfg.antenna_spacing, lambda),
                                         static_cast<Index>(cfg.n_rx_antennas));
    const VectorXcd at = steering_vector(spatial_phase(path.aod, cfg.antenna_spacing, lambda),
                                         static_cast<Index>(cfg.n_tx_antennas));
    const cd tx = at.transpose() * channel.beamformer;
    return path.gain * tx * ar;
}

namespace {

struct PathTerm {
    std::size_t ue = 0;
    VectorXcd h;
    MatrixXcd q;
};

std::vector<PathTerm> path_terms(const SystemConfig& cfg, std::span<const UeChannel> channels,
                                 std::span<const ResourceAssignment> assignments)
{
    if (channels.size() != assignments.size())
        throw DimensionError("rates: channels and assignments differ in UE count");
    if (!subcarriers_disjoint(assignments))
        throw OverlapError("rates: assignments share subcarriers");
    std::vector<PathTerm> terms;
    for (std::size_t k = 0; k < channels.size(); ++k) {
        assignments[k].validate(cfg.n_subcarriers, cfg.n_symbols);
        for (const auto& path : channels[k].paths)
            terms.push_back({k, path_response(cfg, channels[k], path), ici_matrix(path, cfg).values});
    }
    return terms;
}

// Full-length data vector (zero off the UE's support) for one Monte Carlo draw.
VectorXcd draw_qpsk(const ResourceAssignment& asg, int n, std::mt19937_64& rng)
{
    constexpr double a = 0.70710678118654752440;
    VectorXcd s = VectorXcd::Zero(n);
    for (int z : asg.subcarriers) {
        const auto bits = rng();
        s(z - 1) = cd((bits & 1) ? a : -a, (bits & 2) ? a : -a);
    }
    return s;
}

VectorXd profile_from_terms(const SystemConfig& cfg, const std::vector<PathTerm>& terms,
                            std::span<const ResourceAssignment> assignments, int draws,
                            std::uint64_t seed)
{
    if (draws < 1)
        throw DomainError("ici_power: draws must be >= 1");
    const int n = cfg.n_subcarriers;
    const int mr = cfg.n_rx_antennas;
    VectorXd acc = VectorXd::Zero(n);
    for (int d = 0; d < draws; ++d) {
        std::vector<VectorXcd> s;
        s.reserve(assignments.size());
        for (std::size_t k = 0; k < assignments.size(); ++k) {
            std::mt19937_64 rng(derive_seed(seed, {static_cast<std::uint64_t>(d), k}));
            s.push_back(draw_qpsk(assignments[k], n, rng));
        }
        MatrixXcd ici = MatrixXcd::Zero(mr, n);
        for (const auto& t : terms) {
            const auto& sk = s[t.ue];
            // s^T Q̃ with the diagonal (desired) part removed
            Eigen::RowVectorXcd spread = sk.transpose() * t.q;
            spread -= (sk.array() * t.q.diagonal().array()).matrix().transpose();
            ici += t.h * spread;
        }
        acc += ici.cwiseAbs2().colwise().sum().transpose() / static_cast<double>(mr);
    }
    return acc / static_cast<double>(draws);
}

} // namespace

VectorXd ici_power_profile(const SystemConfig& cfg, std::span<const UeChannel> channels,
                           std::span<const ResourceAssignment> assignments, int draws,
                           std::uint64_t seed)
{
    return profile_from_terms(cfg, path_terms(cfg, channels, assignments), assignments, draws, seed);
}

double ici_power(const SystemConfig& cfg, std::span<const UeChannel> channels,
                 std::span<const ResourceAssignment> assignments, int n, int draws,
                 std::uint64_t seed)
{
    if (n < 1 || n > cfg.n_subcarriers)
        throw DomainError("ici_power: subcarrier index outside [1, N]");
    return ici_power_profile(cfg, channels, assignments, draws, seed)(n - 1);
}

VectorXd ici_power_expected(const SystemConfig& cfg, std::span<const UeChannel> channels,
                            std::span<const ResourceAssignment> assignments)
{
    const auto terms = path_terms(cfg, channels, assignments);
    const int n = cfg.n_subcarriers;
    const int mr = cfg.n_rx_antennas;
    VectorXd out = VectorXd::Zero(n);
    // independent unit-power symbols: sum over source subcarriers of |Σ_l h_l Q̃_l[n1, n]|²
    for (std::size_t k = 0; k < assignments.size(); ++k)
        for (int n1 : assignments[k].subcarriers)
            for (int n2 = 1; n2 <= n; ++n2) {
                if (n1 == n2)
                    continue;
                VectorXcd coeff = VectorXcd::Zero(mr);
                for (const auto& t : terms)
                    if (t.ue == k)
                        coeff += t.h * t.q(n1 - 1, n2 - 1);
                out(n2 - 1) += coeff.squaredNorm() / mr;
            }
    return out;
}

double RateReport::sum_rate() const
{
    return rates.rowwise().sum().mean();
}

double RateReport::approx_sum_rate() const
{
    return approx_rates.rowwise().sum().mean();
}

std::vector<double> RateReport::ue_rates() const
{
    int n_ues = 0;
    for (int o : owner)
        n_ues = std::max(n_ues, o + 1);
    std::vector<double> out(static_cast<std::size_t>(n_ues), 0.0);
    const VectorXd mean = rates.colwise().mean().transpose();
    for (std::size_t n = 0; n < owner.size(); ++n)
        if (owner[n] >= 0)
            out[static_cast<std::size_t>(owner[n])] += mean(static_cast<Index>(n));
    return out;
}

RateReport achievable_rates(const SystemConfig& cfg, std::span<const UeChannel> channels,
                            std::span<const ResourceAssignment> assignments, const DataGrid& data,
                            const RateOptions& options)
{
    if (!(cfg.noise_power > 0))
        throw DomainError("achievable_rates: noise_power must be > 0");
    const auto terms = path_terms(cfg, channels, assignments);
    if (data.symbols.size() != assignments.size())
        throw DimensionError("achievable_rates: data and assignments differ in UE count");
    const int n = cfg.n_subcarriers;
    const int g_total = cfg.n_symbols;

    RateReport r;
    r.noise_power = cfg.noise_power;
    r.owner.assign(static_cast<std::size_t>(n), -1);
    r.ici_power = profile_from_terms(cfg, terms, assignments, options.ici_draws, options.seed);
    r.inp_power = r.ici_power.array() + cfg.noise_power;
    r.rates = MatrixXd::Zero(g_total, n);
    r.approx_rates = MatrixXd::Zero(g_total, n);

    for (std::size_t k = 0; k < assignments.size(); ++k) {
        const auto& asg = assignments[k];
        const auto& s = data.symbols[k];
        if (s.rows() != g_total || s.cols() != asg.n_sub())
            throw DimensionError("achievable_rates: data block shape != G x N_k");
        for (Index i = 0; i < asg.n_sub(); ++i) {
            const int z = asg.subcarriers[static_cast<std::size_t>(i)];
            r.owner[static_cast<std::size_t>(z - 1)] = static_cast<int>(k);
            VectorXcd h = VectorXcd::Zero(cfg.n_rx_antennas);
            for (const auto& t : terms)
                if (t.ue == k)
                    h += t.h * t.q(z - 1, z - 1);
            const double gain = h.squaredNorm();
            for (int g = 0; g < g_total; ++g) {
                const double p = gain * std::norm(s(g, i));
                r.rates(g, z - 1) = std::log2(1.0 + p / r.inp_power(z - 1));
                r.approx_rates(g, z - 1) = std::log2(1.0 + p / cfg.noise_power);
            }
        }
    }
    return r;
}

} // namespace isac
