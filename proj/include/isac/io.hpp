#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isac/model.hpp"
#include "isac/music.hpp"
#include "isac/synthesis.hpp"

namespace isac {

// Contents of a JSON configuration file. Every section is optional; missing keys keep
// their defaults. Layout:
//
//   {
//     "system": {"n_subcarriers": 48, "subcarrier_spacing": 1e5, "carrier_freq": 28e9,
//                "cp_duration": 1.111e-6, "n_rx_antennas": 8, "n_tx_antennas": 2,
//                "n_ues": 3, "n_symbols": 48, "antenna_spacing": 0.00535,
//                "noise_power": 1.0},
//     "ues": [{"subcarriers": [...], "symbols": [...],
//              "beamformer": [[re, im], ...],
//              "paths": [{"gain": [re, im], "range": 30, "velocity": 10,
//                         "aoa": 0.5, "aod": 0.3}]}],
//     "music": {"range": [min, max, step], "velocity": [min, max, step],
//               "n_sources": 1, "smoothing": "auto" | "on" | "off"}
//   }
//
// A path may give "delay" in seconds instead of "range" in meters. The symbol and
// sample durations are derived from N, Δf and the CP length.
struct LabConfig {
    SystemConfig system;
    std::vector<ResourceAssignment> assignments;
    std::vector<UeChannel> channels;
    std::optional<MusicConfig> music;
};

LabConfig parse_config(std::string_view json_text);
LabConfig load_config(const std::filesystem::path& path);
std::string dump_config(const LabConfig& config);

// Block dump: 8-byte magic "ISACBLK\0", then little-endian u32 version, block count,
// rows, cols, followed by every block row-major as interleaved float32 (re, im).
inline constexpr std::uint32_t dump_version = 1;

void write_blocks(const std::filesystem::path& path, std::span<const MatrixXcd> blocks);
std::vector<MatrixXcd> read_blocks(const std::filesystem::path& path);

// Sidecar metadata lives next to the dump as "<path>.json".
std::filesystem::path sidecar_path(const std::filesystem::path& path);

struct TrialTruth {
    double range = 0.0;
    double velocity = 0.0;
};

// CSI blocks for a sequence of trials of one UE; blocks are ordered trial-major, one
// per receive antenna.
struct CsiDump {
    SystemConfig system;
    ResourceAssignment assignment;
    int antennas = 1;
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    std::vector<TrialTruth> truths;
    std::vector<MatrixXcd> blocks;
};

void write_csi_dump(const std::filesystem::path& path, const CsiDump& dump);
CsiDump read_csi_dump(const std::filesystem::path& path);

void write_frame_dump(const std::filesystem::path& path, const SystemConfig& cfg,
                      const OfdmaFrameSet& frames);

} // namespace isac
