#include "isac/compensation.hpp"

#include <string>

namespace isac {

CompensationMatrix build_compensator(const DataGrid& data, const ResourceAssignment& assignment,
                                     int symbol, int n_total)
{
    const auto k = static_cast<std::size_t>(assignment.ue_index - 1);
    if (k >= data.symbols.size())
        throw DimensionError("build_compensator: no data block for UE " +
                             std::to_string(assignment.ue_index));
    const auto& s = data.symbols[k];
    if (symbol < 1 || symbol > s.rows())
        throw DimensionError("build_compensator: symbol index outside the data grid");
    if (s.cols() != assignment.n_sub())
        throw DimensionError("build_compensator: data width != N_k");

    CompensationMatrix c;
    c.ue_index = assignment.ue_index;
    c.diag = VectorXcd::Zero(n_total);
    for (Index i = 0; i < assignment.n_sub(); ++i) {
        const cd x = s(symbol - 1, i);
        if (std::abs(x) < min_data_modulus)
            throw CompensationError("build_compensator: data symbol too close to zero");
        c.diag(assignment.subcarriers[static_cast<std::size_t>(i)] - 1) = 1.0 / x;
    }
    return c;
}

std::vector<CompensationMatrix> build_compensators(const DataGrid& data,
                                                   const ResourceAssignment& assignment,
                                                   int n_total)
{
    std::vector<CompensationMatrix> out;
    out.reserve(assignment.symbols.size());
    for (int g : assignment.symbols)
        out.push_back(build_compensator(data, assignment, g, n_total));
    return out;
}

CsiBlock extract_csi(const OfdmaFrameSet& frames, std::span<const CompensationMatrix> compensators,
                     const ResourceAssignment& assignment, int antenna)
{
    if (compensators.size() != assignment.symbols.size())
        throw DimensionError("extract_csi: need one compensator per sensing symbol");
    CsiBlock out;
    out.antenna_index = antenna;
    out.values.resize(assignment.n_sym(), assignment.n_sub());
    for (Index g = 0; g < assignment.n_sym(); ++g) {
        const auto t = static_cast<std::size_t>(assignment.symbols[static_cast<std::size_t>(g)] - 1);
        if (t >= frames.frames.size())
            throw DimensionError("extract_csi: sensing symbol outside the frame set");
        const auto& frame = frames.frames[t];
        if (antenna < 0 || antenna >= frame.rows())
            throw DimensionError("extract_csi: antenna index out of range");
        const MatrixXcd row = frame.row(antenna);
        const MatrixXcd freq = demodulate(row);
        const auto& c = compensators[static_cast<std::size_t>(g)].diag;
        for (Index n = 0; n < assignment.n_sub(); ++n) {
            const Index bin = assignment.subcarriers[static_cast<std::size_t>(n)] - 1;
            out.values(g, n) = freq(0, bin) * c(bin);
        }
    }
    return out;
}

std::vector<CsiBlock> extract_ue_csi(const SystemConfig& cfg, const OfdmaFrameSet& frames,
                                     std::span<const ResourceAssignment> assignments,
                                     std::size_t ue)
{
    if (ue >= assignments.size())
        throw DimensionError("extract_ue_csi: UE position out of range");
    const auto& mine = assignments[ue];
    for (std::size_t j = 0; j < assignments.size(); ++j) {
        if (j == ue)
            continue;
        const ResourceAssignment pair[2] = {mine, assignments[j]};
        if (!subcarriers_disjoint(pair))
            throw OverlapError("extract_ue_csi: UE " + std::to_string(mine.ue_index) +
                               " shares subcarriers with UE " +
                               std::to_string(assignments[j].ue_index) +
                               "; no interference-free compensator exists");
    }
    const auto comps = build_compensators(frames.data, mine, cfg.n_subcarriers);
    std::vector<CsiBlock> out;
    out.reserve(static_cast<std::size_t>(cfg.n_rx_antennas));
    for (int m = 0; m < cfg.n_rx_antennas; ++m)
        out.push_back(extract_csi(frames, comps, mine, m));
    return out;
}

LeakageReport measure_leakage(const SystemConfig& cfg, std::span<const UeChannel> channels,
                              std::span<const ResourceAssignment> assignments,
                              const DataGrid& data, std::size_t ue)
{
    SynthesisOptions opts;
    opts.allow_overlap = true;
    opts.add_noise = false;
    const auto all = synthesize_frames(cfg, channels, assignments, data, 0, opts);

    DataGrid alone_data;
    alone_data.symbols.assign(data.symbols.size(), MatrixXcd());
    for (std::size_t k = 0; k < data.symbols.size(); ++k)
        alone_data.symbols[k] = k == ue ? data.symbols[k]
                                        : MatrixXcd::Zero(data.symbols[k].rows(), data.symbols[k].cols());
    const auto alone = synthesize_frames(cfg, channels, assignments, alone_data, 0, opts);

    const auto& mine = assignments[ue];
    const auto comps = build_compensators(data, mine, cfg.n_subcarriers);
    LeakageReport r;
    for (int m = 0; m < cfg.n_rx_antennas; ++m) {
        const auto mixed = extract_csi(all, comps, mine, m);
        const auto clean = extract_csi(alone, comps, mine, m);
        r.leakage_power += (mixed.values - clean.values).squaredNorm();
        r.signal_power += clean.values.squaredNorm();
    }
    return r;
}

VectorXcd vectorize(const CsiBlock& block)
{
    VectorXcd v(block.values.size());
    const Index cols = block.values.cols();
    for (Index g = 0; g < block.values.rows(); ++g)
        v.segment(g * cols, cols) = block.values.row(g).transpose();
    return v;
}

} // namespace isac
