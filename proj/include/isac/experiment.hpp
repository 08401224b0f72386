#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "isac/compensation.hpp"
#include "isac/fisher.hpp"
#include "isac/io.hpp"
#include "isac/model.hpp"
#include "isac/music.hpp"
#include "isac/schemes.hpp"

namespace isac {

inline constexpr const char* library_version = "1.0.0";

const std::vector<std::string>& experiment_names();

struct Target {
    double range = 30.0;   // m
    double velocity = 10.0; // m/s
    double aoa = 0.6;      // rad
    double aod = 1.0;      // rad
};

struct ExperimentSpec {
    std::string name;
    int trials = 100;
    std::vector<double> snr_grid_db;
    std::uint64_t seed = 1;
    SystemConfig system;
    std::vector<SchemeKind> schemes;
    std::vector<Target> targets;
    std::vector<ResourceAssignment> assignments; // replaces the schemes when non-empty
    MusicConfig music;
    int n_per_ue = 16;
    int g_per_ue = 16;
    int ici_draws = 100;
    std::vector<double> ici_velocities{0.0, 10.0, 20.0, 30.0};
    int ici_subcarriers = 1024;
};

// Defaults for a named experiment: desk-scale geometry, three targets, scheme set and
// SNR grid of that experiment. Throws ConfigError for an unknown name.
ExperimentSpec default_spec(const std::string& name);

struct ResultRow {
    std::string scheme;
    double snr_db = 0.0;
    std::string metric;
    double value = 0.0;
    double ci_halfwidth = 0.0;
};

// Plot-ready series written next to the results.
struct PlotData {
    std::string file;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels; // optional leading text column, one per row
};

struct ResultTable {
    std::vector<ResultRow> rows;
    std::vector<PlotData> plots;

    // nullptr when absent
    const ResultRow* find(const std::string& scheme, double snr_db, const std::string& metric) const;
    std::vector<ResultRow> select(const std::string& metric) const;
};

// Human-readable problems with a spec; empty when the spec can run.
std::vector<std::string> validate(const ExperimentSpec& spec);

ResultTable run(const ExperimentSpec& spec);

// Range and velocity Monte Carlo for one UE; shared by the two single-UE MSE experiments.
ResultTable single_ue_mse(const ExperimentSpec& spec);

std::string to_csv(const ResultTable& table);
std::string plot_csv(const PlotData& plot);

// FNV-1a over the canonical JSON form of the spec.
std::uint64_t config_hash(const ExperimentSpec& spec);
std::string manifest_json(const ExperimentSpec& spec);

// results.csv, manifest.json and one CSV per plot series.
void write_outputs(const ExperimentSpec& spec, const ResultTable& table,
                   const std::filesystem::path& dir);

// Worker count from ISAC_LAB_THREADS, else the hardware concurrency.
int thread_count();

// Runs fn(i) for i in [0, n) on thread_count() workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// One synthesized Monte Carlo realisation.
struct TrialSetup {
    SystemConfig cfg;
    std::vector<ResourceAssignment> assignments;
    std::vector<UeChannel> channels;
    std::vector<TrialTruth> truths;
    DataGrid data;
    std::uint64_t noise_seed = 0;
};

// Channels normalised to |β| = 1 with a random gain phase; noise power 10^(−snr/10).
TrialSetup make_trial(const ExperimentSpec& spec, std::vector<ResourceAssignment> assignments,
                      double snr_db, std::uint64_t trial_seed);

// Compensated CSI of every UE (outer index) at every antenna (inner index).
std::vector<std::vector<CsiBlock>> trial_csi(const TrialSetup& trial);

// Closed-form CRBs for |β| = 1 with all receive antennas combined.
RangeVelocityCrb array_crb(const SystemConfig& cfg, const ResourceAssignment& assignment,
                           double noise_power);
RangeVelocityCrb array_crb_oracle(const SystemConfig& cfg, const ResourceAssignment& assignment,
                                  const Target& target, double noise_power);

} // namespace isac
