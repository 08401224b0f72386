#include "isac/model.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <unordered_set>

namespace isac {

namespace {

bool close_rel(double a, double b, double tol)
{
    return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

} // namespace

SystemConfig SystemConfig::make(int n_subcarriers, double subcarrier_spacing, double carrier_freq,
                                double cp_fraction, int n_rx, int n_tx, int n_ues, int n_symbols)
{
    SystemConfig cfg;
    cfg.n_subcarriers = n_subcarriers;
    cfg.subcarrier_spacing = subcarrier_spacing;
    cfg.carrier_freq = carrier_freq;
    cfg.sample_duration = 1.0 / (n_subcarriers * subcarrier_spacing);
    cfg.cp_duration = cp_fraction / subcarrier_spacing;
    cfg.symbol_duration = cfg.cp_duration + n_subcarriers * cfg.sample_duration;
    cfg.n_rx_antennas = n_rx;
    cfg.n_tx_antennas = n_tx;
    cfg.n_ues = n_ues;
    cfg.n_symbols = n_symbols;
    cfg.antenna_spacing = 0.5 * cfg.c / carrier_freq;
    return cfg;
}

void SystemConfig::validate() const
{
    if (n_subcarriers < 1 || n_rx_antennas < 1 || n_tx_antennas < 1 || n_ues < 1 || n_symbols < 1)
        throw ConfigError("SystemConfig: all counts must be >= 1");
    if (!(subcarrier_spacing > 0 && carrier_freq > 0 && symbol_duration > 0 && cp_duration > 0 &&
          sample_duration > 0 && antenna_spacing > 0 && c > 0))
        throw ConfigError("SystemConfig: durations, frequencies and spacing must be > 0");
    if (!(noise_power >= 0))
        throw ConfigError("SystemConfig: noise_power must be >= 0");
    if (!close_rel(symbol_duration, cp_duration + n_subcarriers * sample_duration, 1e-12))
        throw ConfigError("SystemConfig: symbol_duration != cp_duration + N * sample_duration");
    if (!close_rel(sample_duration, 1.0 / (n_subcarriers * subcarrier_spacing), 1e-12))
        throw ConfigError("SystemConfig: sample_duration != 1 / (N * subcarrier_spacing)");
}

void ResourceAssignment::validate(int n_total, int g_total) const
{
    auto check = [](const std::vector<int>& idx, int limit, const char* what) {
        std::unordered_set<int> seen;
        for (int i : idx) {
            if (i < 1 || i > limit)
                throw AssignmentError(std::string(what) + " index " + std::to_string(i) +
                                      " outside [1, " + std::to_string(limit) + "]");
            if (!seen.insert(i).second)
                throw AssignmentError(std::string("duplicate ") + what + " index " +
                                      std::to_string(i));
        }
    };
    check(subcarriers, n_total, "subcarrier");
    check(symbols, g_total, "symbol");
}

void ChannelPath::validate() const
{
    if (!(delay >= 0))
        throw ConfigError("ChannelPath: delay must be >= 0");
    if (!(std::abs(radial_velocity) < 1e4))
        throw ConfigError("ChannelPath: |radial_velocity| must be < 1e4 m/s");
}

void UeChannel::validate(int n_tx) const
{
    if (beamformer.size() != n_tx)
        throw DimensionError("UeChannel: beamformer length != n_tx_antennas");
    if (std::abs(beamformer.norm() - 1.0) > 1e-9)
        throw ConfigError("UeChannel: beamformer must have unit norm");
    for (const auto& p : paths)
        p.validate();
}

VectorXcd uniform_beamformer(int n_tx)
{
    return VectorXcd::Constant(n_tx, cd(1.0 / std::sqrt(static_cast<double>(n_tx)), 0.0));
}

DataGrid random_qpsk_grid(std::span<const ResourceAssignment> assignments, int n_symbols,
                          std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const double a = 1.0 / std::sqrt(2.0);
    DataGrid grid;
    grid.symbols.reserve(assignments.size());
    for (const auto& asg : assignments) {
        MatrixXcd s(n_symbols, asg.n_sub());
        for (Index t = 0; t < s.rows(); ++t) {
            for (Index n = 0; n < s.cols(); ++n) {
                const auto bits = rng();
                s(t, n) = cd((bits & 1U) ? a : -a, (bits & 2U) ? a : -a);
            }
        }
        grid.symbols.push_back(std::move(s));
    }
    return grid;
}

MatrixXd selection_matrix(const ResourceAssignment& assignment, int n_total)
{
    MatrixXd gamma = MatrixXd::Zero(assignment.n_sub(), n_total);
    for (Index i = 0; i < assignment.n_sub(); ++i) {
        const int col = assignment.subcarriers[static_cast<std::size_t>(i)];
        if (col < 1 || col > n_total)
            throw AssignmentError("selection_matrix: subcarrier index out of range");
        gamma(i, col - 1) = 1.0;
    }
    return gamma;
}

std::int64_t scaled_index_variance(std::span<const int> indices)
{
    std::int64_t s1 = 0;
    std::int64_t s2 = 0;
    for (int x : indices) {
        s1 += x;
        s2 += static_cast<std::int64_t>(x) * x;
    }
    return static_cast<std::int64_t>(indices.size()) * s2 - s1 * s1;
}

bool subcarriers_disjoint(std::span<const ResourceAssignment> assignments)
{
    std::unordered_set<int> seen;
    for (const auto& a : assignments)
        for (int n : a.subcarriers)
            if (!seen.insert(n).second)
                return false;
    return true;
}

} // namespace isac
