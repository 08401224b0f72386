#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "isac/experiment.hpp"
#include "isac/fisher.hpp"
#include "isac/io.hpp"
#include "isac/partition.hpp"
#include "isac/rates.hpp"
#include "isac/rng.hpp"

using namespace isac;

namespace {

std::vector<double> parse_numbers(const std::string& text)
{
    std::vector<double> out;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto comma = text.find(',', start);
        const auto piece = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!piece.empty())
            out.push_back(std::stod(piece));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return out;
}

// Folds a config file into a spec: system numerology, MUSIC grid, and explicit UEs
// whose first path becomes the target.
void apply_config(ExperimentSpec& spec, const LabConfig& lab)
{
    spec.system = lab.system;
    if (lab.music)
        spec.music = *lab.music;
    if (!lab.assignments.empty()) {
        spec.assignments = lab.assignments;
        spec.targets.clear();
        for (const auto& ch : lab.channels) {
            if (ch.paths.empty())
                throw ConfigError("config: every UE needs at least one path");
            const auto& p = ch.paths.front();
            spec.targets.push_back({p.range(lab.system.c), p.radial_velocity, p.aoa, p.aod});
        }
    }
}

struct Common {
    std::string config;
    std::string schemes;
    std::string snr;
    std::uint64_t seed = 1;
};

ExperimentSpec spec_for(const std::string& name, const Common& c)
{
    auto spec = default_spec(name);
    spec.seed = c.seed;
    if (!c.config.empty())
        apply_config(spec, load_config(c.config));
    if (!c.schemes.empty())
        spec.schemes = parse_scheme_list(c.schemes);
    if (!c.snr.empty())
        spec.snr_grid_db = parse_numbers(c.snr);
    return spec;
}

int cmd_run(const std::string& name, int trials, const std::string& out, const Common& c)
{
    auto spec = spec_for(name, c);
    if (trials > 0)
        spec.trials = trials;
    const auto diag = validate(spec);
    if (!diag.empty()) {
        for (const auto& d : diag)
            std::cerr << "invalid spec: " << d << '\n';
        return 2;
    }
    const auto table = run(spec);
    write_outputs(spec, table, out);
    fmt::print("{}: {} rows -> {} (config hash {:016x})\n", spec.name, table.rows.size(), out,
               config_hash(spec));
    return 0;
}

int cmd_validate(const std::string& name, const Common& c)
{
    const auto diag = validate(spec_for(name, c));
    for (const auto& d : diag)
        fmt::print("{}\n", d);
    if (diag.empty())
        fmt::print("ok\n");
    return diag.empty() ? 0 : 1;
}

int cmd_crb(bool oracle, int ues, const Common& c)
{
    auto spec = spec_for("fig6_maxmin", c);
    if (spec.assignments.empty() && c.schemes.empty())
        spec.schemes = parse_scheme_list("table1");
    const double snr = spec.snr_grid_db.empty() ? 0.0 : spec.snr_grid_db.front();
    const double noise = std::pow(10.0, -snr / 10.0);
    fmt::print("scheme,ue,zeta_variance,psi_variance,crb_range,crb_velocity{}\n",
               oracle ? ",oracle_range,oracle_velocity" : "");
    auto emit = [&](const std::string& label, const std::vector<ResourceAssignment>& set) {
        for (std::size_t k = 0; k < set.size(); ++k) {
            const auto& a = set[k];
            const auto crb = array_crb(spec.system, a, noise);
            std::string line = fmt::format("{},{},{},{},{},{}", label, k + 1, index_variance(a.subcarriers),
                                           index_variance(a.symbols), crb.range, crb.velocity);
            if (oracle) {
                const Target t = k < spec.targets.size() ? spec.targets[k] : Target{};
                const auto o = array_crb_oracle(spec.system, a, t, noise);
                line += fmt::format(",{},{}", o.range, o.velocity);
            }
            fmt::print("{}\n", line);
        }
    };
    if (!spec.assignments.empty()) {
        emit("config", spec.assignments);
        return 0;
    }
    for (const auto& s : spec.schemes) {
        auto set = make_assignments(s, s, spec.system.n_subcarriers, spec.n_per_ue, spec.system.n_symbols,
                                    spec.g_per_ue, std::max(ues, 3));
        set.resize(static_cast<std::size_t>(ues));
        emit(s.name(), set);
    }
    return 0;
}

int cmd_partition(int pool, int ues, const std::string& counts_text, const std::string& method)
{
    PartitionInstance inst{pool, ues, {}};
    for (double x : parse_numbers(counts_text))
        inst.counts.push_back(static_cast<int>(x));
    if (inst.counts.size() == 1 && ues > 1)
        inst.counts.assign(static_cast<std::size_t>(ues), inst.counts.front());
    const auto bound = variance_bound(inst);
    nlohmann::json out = {{"pool_size", pool},
                          {"n_ues", ues},
                          {"counts", inst.counts},
                          {"method", method},
                          {"total_variance", bound.total_variance},
                          {"per_ue_bound", bound.per_ue},
                          {"certified_bound", bound.certified}};
    if (method == "exact" || method == "interleaved") {
        const auto sol = method == "exact" ? exact_partition(inst) : interleaved_partition(inst);
        out["subsets"] = sol.subsets;
        out["min_variance"] = sol.min_variance;
        out["gap"] = sol.gap;
        if (inst.equal_counts() && ues < pool) {
            const auto g = crb_gap(pool, ues);
            out["crb_gap"] = {{"num", g.num}, {"den", g.den}, {"value", g.value()}};
        }
    } else if (method != "bound") {
        throw ConfigError("unknown partition method '" + method + "'");
    }
    fmt::print("{}\n", out.dump(2));
    return 0;
}

int cmd_rates(const Common& c)
{
    auto spec = spec_for("fig7_rate_vs_crb", c);
    const auto diag = validate(spec);
    if (!diag.empty()) {
        for (const auto& d : diag)
            std::cerr << "invalid spec: " << d << '\n';
        return 2;
    }
    const auto table = run(spec);
    fmt::print("scheme,snr_db,sum_rate,sum_rate_approx,max_crb_range\n");
    for (const auto& r : table.select("sum_rate")) {
        const auto* approx = table.find(r.scheme, r.snr_db, "sum_rate_approx");
        const auto* crb = table.find(r.scheme, r.snr_db, "max_crb_range");
        fmt::print("{},{},{},{},{}\n", r.scheme, r.snr_db, r.value, approx->value, crb->value);
    }
    return 0;
}

int cmd_simulate(int trials, int ue, const std::string& out, const std::string& frames_out, const Common& c)
{
    auto spec = spec_for("fig6_maxmin", c);
    if (spec.assignments.empty() && c.schemes.empty())
        spec.schemes = parse_scheme_list("interleaved");
    std::vector<ResourceAssignment> set = spec.assignments;
    if (set.empty()) {
        const auto& s = spec.schemes.front();
        set = make_assignments(s, s, spec.system.n_subcarriers, spec.n_per_ue, spec.system.n_symbols,
                               spec.g_per_ue, 3);
    }
    if (ue < 1 || ue > static_cast<int>(set.size()))
        throw ConfigError("simulate: --ue outside the configured UEs");
    const double snr = spec.snr_grid_db.empty() ? 20.0 : spec.snr_grid_db.front();

    CsiDump dump;
    dump.antennas = spec.system.n_rx_antennas;
    dump.snr_db = snr;
    dump.seed = spec.seed;
    for (int t = 0; t < trials; ++t) {
        const auto trial = make_trial(spec, set, snr, derive_seed(spec.seed, {static_cast<std::uint64_t>(t)}));
        if (t == 0) {
            dump.system = trial.cfg;
            dump.assignment = trial.assignments[static_cast<std::size_t>(ue - 1)];
            if (!frames_out.empty())
                write_frame_dump(frames_out, trial.cfg,
                                 synthesize_frames(trial.cfg, trial.channels, trial.assignments, trial.data,
                                                   trial.noise_seed));
        }
        const auto csi = trial_csi(trial);
        for (const auto& b : csi[static_cast<std::size_t>(ue - 1)])
            dump.blocks.push_back(b.values);
        dump.truths.push_back(trial.truths[static_cast<std::size_t>(ue - 1)]);
    }
    write_csi_dump(out, dump);
    fmt::print("{} trials of UE {} -> {} (+ {})\n", trials, ue, out, sidecar_path(out).string());
    return 0;
}

int cmd_estimate(const std::string& in, const Common& c)
{
    const auto dump = read_csi_dump(in);
    MusicConfig music;
    if (!c.config.empty()) {
        const auto lab = load_config(c.config);
        if (lab.music)
            music = *lab.music;
    }
    fmt::print("trial,range_hat,velocity_hat,range_true,velocity_true,range_error,velocity_error\n");
    const auto per_trial = static_cast<std::size_t>(dump.antennas);
    for (std::size_t t = 0; t < dump.truths.size(); ++t) {
        std::vector<CsiBlock> blocks;
        for (std::size_t m = 0; m < per_trial; ++m)
            blocks.push_back({dump.blocks[t * per_trial + m], static_cast<int>(m)});
        const auto est = estimate(dump.system, blocks, dump.assignment, music);
        const auto& truth = dump.truths[t];
        if (est.pairs.empty()) {
            fmt::print("{},nan,nan,{},{},nan,nan\n", t, truth.range, truth.velocity);
            continue;
        }
        const auto& e = est.pairs.front();
        fmt::print("{},{},{},{},{},{},{}\n", t, e.range, e.velocity, truth.range, truth.velocity,
                   e.range - truth.range, e.velocity - truth.velocity);
    }
    return 0;
}

void add_common(CLI::App* app, Common& c, bool with_schemes = true)
{
    app->add_option("--config", c.config, "JSON configuration file")->check(CLI::ExistingFile);
    if (with_schemes)
        app->add_option("--scheme", c.schemes,
                        "subband|interleaved|edge-first|generalized:<seed>|table1|table2 or a comma list");
    app->add_option("--snr", c.snr, "SNR grid in dB, comma separated");
    app->add_option("--seed", c.seed, "base seed");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Resource distribution, CRB and MUSIC toolkit for OFDMA sensing"};
    app.require_subcommand(1);

    Common common;
    std::string experiment;
    std::string out = "out";
    int trials = 0;
    auto* run_cmd = app.add_subcommand("run", "run a named experiment and write CSV + manifest");
    run_cmd->add_option("--experiment", experiment, "experiment name")
        ->required()
        ->check(CLI::IsMember(experiment_names()));
    run_cmd->add_option("--trials", trials, "Monte Carlo trials (default per experiment)");
    run_cmd->add_option("--out", out, "output directory");
    add_common(run_cmd, common);

    auto* validate_cmd = app.add_subcommand("validate", "print diagnostics for an experiment spec");
    validate_cmd->add_option("--experiment", experiment, "experiment name")->required();
    add_common(validate_cmd, common);

    bool oracle = false;
    int ues = 1;
    auto* crb_cmd = app.add_subcommand("crb", "closed-form CRBs per scheme and UE");
    crb_cmd->add_flag("--oracle", oracle, "also evaluate the Fisher-projection CRB");
    crb_cmd->add_option("--ues", ues, "number of UEs")->check(CLI::Range(1, 64));
    add_common(crb_cmd, common);

    int pool = 48;
    std::string counts = "16";
    std::string method = "interleaved";
    auto* part_cmd = app.add_subcommand("partition", "max-min variance subcarrier partition");
    part_cmd->add_option("--pool", pool, "pool size N");
    part_cmd->add_option("--ues", ues, "number of UEs K");
    part_cmd->add_option("--counts", counts, "per-UE counts, comma separated (one value = equal)");
    part_cmd->add_option("--method", method, "exact|interleaved|bound");

    auto* rates_cmd = app.add_subcommand("rates", "sum rate and max-CRB per scheme");
    add_common(rates_cmd, common);

    int ue = 1;
    int sim_trials = 10;
    std::string frames_out;
    auto* sim_cmd = app.add_subcommand("simulate", "synthesize trials and dump one UE's CSI");
    sim_cmd->add_option("--trials", sim_trials, "number of trials");
    sim_cmd->add_option("--ue", ue, "UE whose CSI is dumped (1-based)");
    sim_cmd->add_option("--out", out, "CSI dump path")->required();
    sim_cmd->add_option("--frames", frames_out, "also dump the first trial's frames here");
    add_common(sim_cmd, common);

    std::string in;
    auto* est_cmd = app.add_subcommand("estimate", "MUSIC estimates from a CSI dump");
    est_cmd->add_option("--in", in, "CSI dump path")->required()->check(CLI::ExistingFile);
    add_common(est_cmd, common, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd)
            return cmd_run(experiment, trials, out, common);
        if (*validate_cmd)
            return cmd_validate(experiment, common);
        if (*crb_cmd)
            return cmd_crb(oracle, ues, common);
        if (*part_cmd)
            return cmd_partition(pool, ues, counts, method);
        if (*rates_cmd)
            return cmd_rates(common);
        if (*sim_cmd)
            return cmd_simulate(sim_trials, ue, out, frames_out, common);
        if (*est_cmd)
            return cmd_estimate(in, common);
    } catch (const isac::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
