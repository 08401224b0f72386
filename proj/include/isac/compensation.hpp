#pragma once

#include <span>
#include <vector>

#include "isac/model.hpp"
#include "isac/synthesis.hpp"

namespace isac {

// Diagonal of C_k: 1/s on the UE's subcarriers, 0 elsewhere.
struct CompensationMatrix {
    VectorXcd diag;
    int ue_index = 1;
};

// Compensated CSI of one UE at one receive antenna; row g is sensing symbol ψ[g],
// column n is subcarrier ζ[n].
struct CsiBlock {
    MatrixXcd values;
    int antenna_index = 0; // 0-based
};

inline constexpr double min_data_modulus = 1e-6;

// Compensator for symbol `symbol` (1-based, absolute in the pool). Throws
// CompensationError when an assigned data entry has modulus below min_data_modulus.
CompensationMatrix build_compensator(const DataGrid& data, const ResourceAssignment& assignment,
                                     int symbol, int n_total);

// One compensator per sensing symbol ψ_k, in ψ order.
std::vector<CompensationMatrix> build_compensators(const DataGrid& data,
                                                   const ResourceAssignment& assignment,
                                                   int n_total);

// Demodulates the sensing symbols and applies the compensators for antenna m.
CsiBlock extract_csi(const OfdmaFrameSet& frames, std::span<const CompensationMatrix> compensators,
                     const ResourceAssignment& assignment, int antenna);

// CSI of UE `ue` (0-based position in `assignments`) at every receive antenna. Throws
// OverlapError when that UE shares a subcarrier with another one.
std::vector<CsiBlock> extract_ue_csi(const SystemConfig& cfg, const OfdmaFrameSet& frames,
                                     std::span<const ResourceAssignment> assignments,
                                     std::size_t ue);

// Forces synthesis with the given (possibly overlapping) assignments and reports the
// cross-UE power left in UE `ue`'s compensated CSI, relative to its interference-free CSI.
struct LeakageReport {
    double leakage_power = 0.0;
    double signal_power = 0.0;
    double relative() const { return leakage_power / signal_power; }
};
LeakageReport measure_leakage(const SystemConfig& cfg, std::span<const UeChannel> channels,
                              std::span<const ResourceAssignment> assignments,
                              const DataGrid& data, std::size_t ue);

// Vectorises CSI row-major (entry g·N_k + n), matching build_manifold.
VectorXcd vectorize(const CsiBlock& block);

} // namespace isac
