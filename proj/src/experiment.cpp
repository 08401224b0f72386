#include "isac/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "isac/fisher.hpp"
#include "isac/partition.hpp"
#include "isac/rates.hpp"
#include "isac/rng.hpp"
#include "isac/synthesis.hpp"

namespace isac {

using nlohmann::json;

const std::vector<std::string>& experiment_names()
{
    static const std::vector<std::string> names = {"fig3_ici",          "fig4_peaks",
                                                   "fig5_range_mse",    "fig6_velocity_mse",
                                                   "fig6_maxmin",       "fig7_rate_vs_crb"};
    return names;
}

namespace {

std::vector<double> snr_range(double lo, double hi, double step)
{
    std::vector<double> out;
    for (double s = lo; s <= hi + 1e-9; s += step)
        out.push_back(s);
    return out;
}

std::vector<Target> three_targets()
{
    return {{30.0, 10.0, 0.6, 1.0}, {50.0, 30.0, 1.1, 1.3}, {80.0, 20.0, 2.0, 1.6}};
}

double db_to_noise(double snr_db)
{
    return std::pow(10.0, -snr_db / 10.0);
}

struct MeanCi {
    double mean = 0.0;
    double ci = 0.0;
};

MeanCi mean_ci(const std::vector<double>& x)
{
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x)
        mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : x)
        ss += (v - mean) * (v - mean);
    const double sd = x.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return {mean, 1.96 * sd / std::sqrt(n)};
}

std::vector<std::vector<ResourceAssignment>> scheme_assignments(const ExperimentSpec& spec, int n_ues)
{
    std::vector<std::vector<ResourceAssignment>> out;
    if (!spec.assignments.empty()) {
        out.push_back(spec.assignments);
        return out;
    }
    const int k_layout = std::max(n_ues, 3);
    for (const auto& s : spec.schemes) {
        auto all = make_assignments(s, s, spec.system.n_subcarriers, spec.n_per_ue,
                                    spec.system.n_symbols, spec.g_per_ue, k_layout);
        all.resize(static_cast<std::size_t>(n_ues));
        out.push_back(std::move(all));
    }
    return out;
}

std::vector<std::string> scheme_labels(const ExperimentSpec& spec)
{
    if (!spec.assignments.empty())
        return {"config"};
    std::vector<std::string> out;
    for (const auto& s : spec.schemes)
        out.push_back(s.name());
    return out;
}

// Pivot into snr_db, then (mean, ci) per scheme for each metric.
PlotData pivot(const ResultTable& table, const std::string& file, const std::vector<std::string>& schemes,
               const std::vector<double>& snrs, const std::vector<std::string>& metrics)
{
    PlotData p;
    p.file = file;
    p.columns.push_back("snr_db");
    for (const auto& m : metrics)
        for (const auto& s : schemes) {
            p.columns.push_back(m + "[" + s + "]");
            p.columns.push_back(m + "_ci[" + s + "]");
        }
    for (double snr : snrs) {
        std::vector<double> row{snr};
        for (const auto& m : metrics)
            for (const auto& s : schemes) {
                const auto* r = table.find(s, snr, m);
                row.push_back(r ? r->value : std::nan(""));
                row.push_back(r ? r->ci_halfwidth : std::nan(""));
            }
        p.rows.push_back(std::move(row));
    }
    return p;
}

std::string format_double(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    return fmt::format("{}", x);
}

} // namespace

ExperimentSpec default_spec(const std::string& name)
{
    ExperimentSpec spec;
    spec.name = name;
    spec.targets = three_targets();
    if (name == "fig3_ici") {
        spec.trials = 1;
        spec.schemes = {{Scheme::interleaved}};
    } else if (name == "fig4_peaks") {
        spec.trials = 1;
        spec.snr_grid_db = {20.0};
        spec.schemes = parse_scheme_list("table1");
        spec.targets = {{50.0, 20.0, 0.6, 1.0}};
    } else if (name == "fig5_range_mse" || name == "fig6_velocity_mse") {
        spec.trials = 500;
        spec.snr_grid_db = snr_range(-20.0, 30.0, 5.0);
        spec.schemes = parse_scheme_list("table1");
        spec.targets = {three_targets().front()};
    } else if (name == "fig6_maxmin") {
        spec.trials = 200;
        spec.snr_grid_db = snr_range(-10.0, 30.0, 10.0);
        spec.schemes = parse_scheme_list("table2");
    } else if (name == "fig7_rate_vs_crb") {
        spec.trials = 1;
        spec.snr_grid_db = snr_range(0.0, 30.0, 5.0);
        spec.schemes = parse_scheme_list("table2");
    } else {
        throw ConfigError("unknown experiment '" + name + "'");
    }
    return spec;
}

const ResultRow* ResultTable::find(const std::string& scheme, double snr_db, const std::string& metric) const
{
    for (const auto& r : rows)
        if (r.scheme == scheme && r.metric == metric && std::abs(r.snr_db - snr_db) < 1e-9)
            return &r;
    return nullptr;
}

std::vector<ResultRow> ResultTable::select(const std::string& metric) const
{
    std::vector<ResultRow> out;
    for (const auto& r : rows)
        if (r.metric == metric)
            out.push_back(r);
    return out;
}

int thread_count()
{
    if (const char* env = std::getenv("ISAC_LAB_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1)
            return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn)
{
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

TrialSetup make_trial(const ExperimentSpec& spec, std::vector<ResourceAssignment> assignments,
                      double snr_db, std::uint64_t trial_seed)
{
    if (spec.targets.size() < assignments.size())
        throw ConfigError("make_trial: fewer targets than UEs");
    TrialSetup t;
    t.cfg = spec.system;
    t.cfg.noise_power = db_to_noise(snr_db);
    t.cfg.n_ues = static_cast<int>(assignments.size());
    for (std::size_t k = 0; k < assignments.size(); ++k)
        assignments[k].ue_index = static_cast<int>(k) + 1;
    t.assignments = std::move(assignments);

    std::mt19937_64 rng(derive_seed(trial_seed, {0}));
    std::uniform_real_distribution<double> phase(0.0, two_pi);
    const double lambda = t.cfg.wavelength();
    for (std::size_t k = 0; k < t.assignments.size(); ++k) {
        const auto& target = spec.targets[k];
        UeChannel ch;
        ch.beamformer = uniform_beamformer(t.cfg.n_tx_antennas);
        ChannelPath p;
        p.delay = target.range / t.cfg.c;
        p.radial_velocity = target.velocity;
        p.aoa = target.aoa;
        p.aod = target.aod;
        const VectorXcd at = steering_vector(spatial_phase(p.aod, t.cfg.antenna_spacing, lambda),
                                             static_cast<Index>(t.cfg.n_tx_antennas));
        const double tx = std::abs(cd(at.transpose() * ch.beamformer));
        if (tx < 1e-9)
            throw ConfigError("make_trial: target AOD sits in a transmit beam null");
        p.gain = std::polar(1.0 / tx, phase(rng));
        ch.paths.push_back(p);
        t.channels.push_back(std::move(ch));
        t.truths.push_back({target.range, target.velocity});
    }
    t.data = random_qpsk_grid(t.assignments, t.cfg.n_symbols, derive_seed(trial_seed, {1}));
    t.noise_seed = derive_seed(trial_seed, {2});
    return t;
}

std::vector<std::vector<CsiBlock>> trial_csi(const TrialSetup& trial)
{
    const auto frames = synthesize_frames(trial.cfg, trial.channels, trial.assignments, trial.data,
                                          trial.noise_seed);
    std::vector<std::vector<CsiBlock>> out;
    for (std::size_t k = 0; k < trial.assignments.size(); ++k)
        out.push_back(extract_ue_csi(trial.cfg, frames, trial.assignments, k));
    return out;
}

RangeVelocityCrb array_crb(const SystemConfig& cfg, const ResourceAssignment& assignment,
                           double noise_power)
{
    const auto in = crb_inputs(cfg, assignment, 1.0, noise_power);
    const double m = cfg.n_rx_antennas;
    return {crb_range(in) / m, crb_velocity(in) / m};
}

RangeVelocityCrb array_crb_oracle(const SystemConfig& cfg, const ResourceAssignment& assignment,
                                  const Target& target, double noise_power)
{
    FisherProblem p;
    p.assignment = assignment;
    p.target.delay = target.range / cfg.c;
    p.target.radial_velocity = target.velocity;
    p.beta = 1.0;
    p.noise_power = noise_power;
    p.config = cfg;
    auto crb = to_range_velocity(fisher_crb(p), cfg.c);
    crb.range /= cfg.n_rx_antennas;
    crb.velocity /= cfg.n_rx_antennas;
    return crb;
}

std::vector<std::string> validate(const ExperimentSpec& spec)
{
    std::vector<std::string> diag;
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), spec.name) == names.end()) {
        diag.push_back("unknown experiment '" + spec.name + "'");
        return diag;
    }
    if (spec.trials < 1)
        diag.push_back("trials must be >= 1");
    if (!std::is_sorted(spec.snr_grid_db.begin(), spec.snr_grid_db.end()))
        diag.push_back("SNR grid must be sorted ascending");
    try {
        spec.system.validate();
    } catch (const Error& e) {
        diag.push_back(e.what());
    }
    try {
        spec.music.validate();
    } catch (const Error& e) {
        diag.push_back(e.what());
    }
    if (spec.assignments.empty() && spec.schemes.empty())
        diag.push_back("no schemes selected");

    const bool multi = spec.name == "fig6_maxmin" || spec.name == "fig7_rate_vs_crb";
    const bool estimates = spec.name == "fig4_peaks" || spec.name == "fig5_range_mse" ||
                           spec.name == "fig6_velocity_mse" || spec.name == "fig6_maxmin";
    const std::size_t n_ues = spec.assignments.empty() ? (multi ? 3 : 1) : spec.assignments.size();
    if (spec.targets.size() < n_ues)
        diag.push_back(fmt::format("{} UEs but only {} targets", n_ues, spec.targets.size()));
    if (estimates)
        for (std::size_t k = 0; k < spec.targets.size(); ++k) {
            const auto& t = spec.targets[k];
            if (!spec.music.range.contains(t.range))
                diag.push_back(fmt::format("target {} range {} m outside the MUSIC range grid", k + 1, t.range));
            if (!spec.music.velocity.contains(t.velocity))
                diag.push_back(fmt::format("target {} velocity {} m/s outside the MUSIC velocity grid", k + 1,
                                           t.velocity));
        }

    try {
        const auto sets = scheme_assignments(spec, static_cast<int>(n_ues));
        const auto labels = scheme_labels(spec);
        for (std::size_t i = 0; i < sets.size(); ++i) {
            for (const auto& a : sets[i])
                a.validate(spec.system.n_subcarriers, spec.system.n_symbols);
            if (!subcarriers_disjoint(sets[i]))
                diag.push_back("scheme " + labels[i] +
                               ": UEs share subcarriers, so no interference-free compensator exists");
        }
    } catch (const Error& e) {
        diag.push_back(e.what());
    }
    return diag;
}

namespace {

struct TrialErrors {
    double range2 = 0.0;
    double velocity2 = 0.0;
    bool resolved = false;
};

TrialErrors score(const EstimateSet& est, const TrialTruth& truth, const MusicConfig& music)
{
    // an empty estimate falls back to the grid corner so the trial still counts
    Estimate e{music.range.min, music.velocity.min, 0.0};
    if (!est.pairs.empty())
        e = est.pairs.front();
    const double dr = e.range - truth.range;
    const double dv = e.velocity - truth.velocity;
    return {dr * dr, dv * dv, est.resolved};
}

ResultTable run_fig3(const ExperimentSpec& spec)
{
    ResultTable table;
    SystemConfig cfg = SystemConfig::make(spec.ici_subcarriers, spec.system.subcarrier_spacing,
                                          spec.system.carrier_freq,
                                          spec.system.cp_duration * spec.system.subcarrier_spacing,
                                          spec.system.n_rx_antennas, spec.system.n_tx_antennas, 3,
                                          spec.system.n_symbols);
    cfg.noise_power = 1.0;
    const int n = cfg.n_subcarriers;
    const int per_ue = n / 3;

    PlotData plot;
    plot.file = "fig3_ici.csv";
    plot.columns.push_back("n2");
    const int n1 = n / 2;
    std::vector<VectorXd> cuts;

    for (double v : spec.ici_velocities) {
        const std::string label = fmt::format("v={}", v);
        ChannelPath path;
        path.delay = spec.targets.front().range / cfg.c;
        path.radial_velocity = v;
        const auto q = ici_matrix(path, cfg);
        table.rows.push_back({label, 0.0, "max_offdiag_ici", q.max_offdiagonal(), 0.0});
        double sum = 0.0;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                if (i != j)
                    sum += std::abs(q.values(i, j));
        table.rows.push_back({label, 0.0, "mean_offdiag_ici", sum / (static_cast<double>(n) * (n - 1)), 0.0});
        table.rows.push_back({label, 0.0, "phase_diagonal_distance", q.distance_from_phase_diagonal(cfg), 0.0});

        ExperimentSpec sub = spec;
        sub.system = cfg;
        for (auto& t : sub.targets)
            t.velocity = v;
        auto asg = make_assignments(spec.schemes.front(), spec.schemes.front(), n, per_ue,
                                    cfg.n_symbols, std::min(spec.g_per_ue, cfg.n_symbols), 3);
        const auto trial = make_trial(sub, asg, 0.0, derive_seed(spec.seed, {3}));
        const VectorXd ici = ici_power_profile(trial.cfg, trial.channels, trial.assignments,
                                               spec.ici_draws, derive_seed(spec.seed, {4}));
        table.rows.push_back({label, 0.0, "max_ici_power", ici.maxCoeff(), 0.0});
        table.rows.push_back({label, 0.0, "mean_ici_power", ici.mean(), 0.0});

        plot.columns.push_back("abs_q[" + label + "]");
        VectorXd cut(n);
        for (int j = 0; j < n; ++j)
            cut(j) = std::abs(q.values(n1 - 1, j));
        cuts.push_back(cut);
    }
    for (int j = 0; j < n; ++j) {
        std::vector<double> row{static_cast<double>(j + 1)};
        for (const auto& c : cuts)
            row.push_back(c(j));
        plot.rows.push_back(std::move(row));
    }
    table.plots.push_back(std::move(plot));
    return table;
}

double half_power_width(const VectorXd& cut, Index peak, double step)
{
    const double half = cut(peak) / 2.0;
    Index lo = peak;
    Index hi = peak;
    while (lo > 0 && cut(lo - 1) >= half)
        --lo;
    while (hi + 1 < cut.size() && cut(hi + 1) >= half)
        ++hi;
    return static_cast<double>(hi - lo + 1) * step;
}

ResultTable run_fig4(const ExperimentSpec& spec)
{
    ResultTable table;
    const auto sets = scheme_assignments(spec, 1);
    const auto labels = scheme_labels(spec);
    const double snr = spec.snr_grid_db.empty() ? 20.0 : spec.snr_grid_db.front();
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const auto trial = make_trial(spec, sets[s], snr, derive_seed(spec.seed, {s, 0}));
        const auto csi = trial_csi(trial);
        const auto layout = snapshot_layout(trial.assignments.front(), spec.music);
        const MatrixXcd us = signal_subspace(snapshot_matrix(csi.front(), layout), spec.music.n_sources);
        const MatrixXd p = spectrum_grid(us, trial.cfg, layout, spec.music);
        Index iv = 0;
        Index ir = 0;
        const double peak = p.maxCoeff(&iv, &ir);
        const auto est = estimate(trial.cfg, csi.front(), trial.assignments.front(), spec.music);
        const auto err = score(est, trial.truths.front(), spec.music);
        const VectorXd range_cut = p.row(iv).transpose();
        const VectorXd velocity_cut = p.col(ir);
        table.rows.push_back({labels[s], snr, "range_error", std::sqrt(err.range2), 0.0});
        table.rows.push_back({labels[s], snr, "velocity_error", std::sqrt(err.velocity2), 0.0});
        table.rows.push_back({labels[s], snr, "range_width_3db",
                              half_power_width(range_cut, ir, spec.music.range.step), 0.0});
        table.rows.push_back({labels[s], snr, "velocity_width_3db",
                              half_power_width(velocity_cut, iv, spec.music.velocity.step), 0.0});

        PlotData rc;
        rc.file = "fig4_" + labels[s] + "_range_cut.csv";
        rc.columns = {"range_m", "spectrum_db"};
        for (Index j = 0; j < range_cut.size(); ++j)
            rc.rows.push_back({spec.music.range.at(j), 10.0 * std::log10(range_cut(j) / peak)});
        PlotData vc;
        vc.file = "fig4_" + labels[s] + "_velocity_cut.csv";
        vc.columns = {"velocity_mps", "spectrum_db"};
        for (Index j = 0; j < velocity_cut.size(); ++j)
            vc.rows.push_back({spec.music.velocity.at(j), 10.0 * std::log10(velocity_cut(j) / peak)});
        table.plots.push_back(std::move(rc));
        table.plots.push_back(std::move(vc));
    }
    return table;
}

ResultTable run_fig6_maxmin(const ExperimentSpec& spec)
{
    ResultTable table;
    const int n_ues = spec.assignments.empty() ? 3 : static_cast<int>(spec.assignments.size());
    const auto sets = scheme_assignments(spec, n_ues);
    const auto labels = scheme_labels(spec);
    const auto& snrs = spec.snr_grid_db;
    const std::size_t trials = static_cast<std::size_t>(spec.trials);
    const std::size_t per_scheme = snrs.size() * trials;

    // errors[s][i][trial][ue]
    std::vector<std::vector<TrialErrors>> errors(sets.size() * per_scheme);
    parallel_for(errors.size(), [&](std::size_t job) {
        const std::size_t s = job / per_scheme;
        const std::size_t i = (job % per_scheme) / trials;
        const std::size_t t = job % trials;
        const auto trial = make_trial(spec, sets[s], snrs[i], derive_seed(spec.seed, {s, i, t}));
        const auto csi = trial_csi(trial);
        std::vector<TrialErrors> e;
        for (std::size_t k = 0; k < csi.size(); ++k)
            e.push_back(score(estimate(trial.cfg, csi[k], trial.assignments[k], spec.music),
                              trial.truths[k], spec.music));
        errors[job] = std::move(e);
    });

    for (std::size_t s = 0; s < sets.size(); ++s) {
        PartitionInstance inst{spec.system.n_subcarriers, n_ues, {}};
        for (const auto& a : sets[s])
            inst.counts.push_back(static_cast<int>(a.n_sub()));
        const double certified = variance_bound(inst).certified;
        for (std::size_t i = 0; i < snrs.size(); ++i) {
            const double noise = db_to_noise(snrs[i]);
            double max_r = 0.0;
            double max_r_oracle = 0.0;
            double max_v = 0.0;
            double low = 0.0;
            for (std::size_t k = 0; k < sets[s].size(); ++k) {
                const auto crb = array_crb(spec.system, sets[s][k], noise);
                const auto oracle = array_crb_oracle(spec.system, sets[s][k], spec.targets[k], noise);
                max_r = std::max(max_r, crb.range);
                max_r_oracle = std::max(max_r_oracle, oracle.range);
                max_v = std::max(max_v, crb.velocity);
                auto in = crb_inputs(spec.system, sets[s][k], 1.0, noise);
                in.zeta_variance = certified;
                low = std::max(low, crb_range(in) / spec.system.n_rx_antennas);
            }
            table.rows.push_back({labels[s], snrs[i], "max_crb_range", max_r, 0.0});
            table.rows.push_back({labels[s], snrs[i], "max_crb_range_oracle", max_r_oracle, 0.0});
            table.rows.push_back({labels[s], snrs[i], "crb_low_range", low, 0.0});
            table.rows.push_back({labels[s], snrs[i], "max_crb_gap", max_r / low - 1.0, 0.0});
            table.rows.push_back({labels[s], snrs[i], "max_crb_velocity", max_v, 0.0});

            MeanCi worst_r{-1.0, 0.0};
            MeanCi worst_v{-1.0, 0.0};
            for (std::size_t k = 0; k < sets[s].size(); ++k) {
                std::vector<double> r2;
                std::vector<double> v2;
                for (std::size_t t = 0; t < trials; ++t) {
                    const auto& e = errors[s * per_scheme + i * trials + t][k];
                    r2.push_back(e.range2);
                    v2.push_back(e.velocity2);
                }
                const auto mr = mean_ci(r2);
                const auto mv = mean_ci(v2);
                if (mr.mean > worst_r.mean)
                    worst_r = mr;
                if (mv.mean > worst_v.mean)
                    worst_v = mv;
            }
            table.rows.push_back({labels[s], snrs[i], "max_mse_range", worst_r.mean, worst_r.ci});
            table.rows.push_back({labels[s], snrs[i], "max_mse_velocity", worst_v.mean, worst_v.ci});
        }
    }
    table.plots.push_back(pivot(table, "fig6_maxmin.csv", labels, snrs,
                                {"max_mse_range", "max_crb_range", "crb_low_range"}));
    return table;
}

ResultTable run_fig7(const ExperimentSpec& spec)
{
    ResultTable table;
    const int n_ues = spec.assignments.empty() ? 3 : static_cast<int>(spec.assignments.size());
    const auto sets = scheme_assignments(spec, n_ues);
    const auto labels = scheme_labels(spec);
    for (std::size_t i = 0; i < spec.snr_grid_db.size(); ++i) {
        const double snr = spec.snr_grid_db[i];
        std::vector<double> rates;
        std::vector<double> crbs;
        for (std::size_t s = 0; s < sets.size(); ++s) {
            // the same channel and data draw for every scheme
            const auto trial = make_trial(spec, sets[s], snr, derive_seed(spec.seed, {i}));
            RateOptions opts;
            opts.ici_draws = spec.ici_draws;
            opts.seed = derive_seed(spec.seed, {i, 1});
            const auto report = achievable_rates(trial.cfg, trial.channels, trial.assignments, trial.data, opts);
            double max_crb = 0.0;
            for (const auto& a : trial.assignments)
                max_crb = std::max(max_crb, array_crb(trial.cfg, a, trial.cfg.noise_power).range);
            table.rows.push_back({labels[s], snr, "sum_rate", report.sum_rate(), 0.0});
            table.rows.push_back({labels[s], snr, "sum_rate_approx", report.approx_sum_rate(), 0.0});
            table.rows.push_back({labels[s], snr, "max_ici_power", report.ici_power.maxCoeff(), 0.0});
            table.rows.push_back({labels[s], snr, "max_crb_range", max_crb, 0.0});
            rates.push_back(report.sum_rate());
            crbs.push_back(max_crb);
        }
        auto spread = [](const std::vector<double>& x) {
            const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
            return (*hi - *lo) / *lo;
        };
        table.rows.push_back({"all", snr, "sum_rate_spread", spread(rates), 0.0});
        table.rows.push_back({"all", snr, "max_crb_range_spread", spread(crbs), 0.0});
    }
    table.plots.push_back(pivot(table, "fig7_rate_vs_crb.csv", labels, spec.snr_grid_db,
                                {"sum_rate", "max_crb_range"}));
    return table;
}

} // namespace

ResultTable single_ue_mse(const ExperimentSpec& spec)
{
    ResultTable table;
    const auto sets = scheme_assignments(spec, 1);
    const auto labels = scheme_labels(spec);
    const auto& snrs = spec.snr_grid_db;
    const std::size_t trials = static_cast<std::size_t>(spec.trials);
    const std::size_t per_scheme = snrs.size() * trials;

    std::vector<TrialErrors> errors(sets.size() * per_scheme);
    parallel_for(errors.size(), [&](std::size_t job) {
        const std::size_t s = job / per_scheme;
        const std::size_t i = (job % per_scheme) / trials;
        const std::size_t t = job % trials;
        const auto trial = make_trial(spec, sets[s], snrs[i], derive_seed(spec.seed, {s, i, t}));
        const auto csi = trial_csi(trial);
        errors[job] = score(estimate(trial.cfg, csi.front(), trial.assignments.front(), spec.music),
                            trial.truths.front(), spec.music);
    });

    for (std::size_t s = 0; s < sets.size(); ++s)
        for (std::size_t i = 0; i < snrs.size(); ++i) {
            std::vector<double> r2;
            std::vector<double> v2;
            double resolved = 0.0;
            for (std::size_t t = 0; t < trials; ++t) {
                const auto& e = errors[s * per_scheme + i * trials + t];
                r2.push_back(e.range2);
                v2.push_back(e.velocity2);
                resolved += e.resolved ? 1.0 : 0.0;
            }
            const double noise = db_to_noise(snrs[i]);
            const auto& asg = sets[s].front();
            const auto crb = array_crb(spec.system, asg, noise);
            const auto oracle = array_crb_oracle(spec.system, asg, spec.targets.front(), noise);
            const auto mr = mean_ci(r2);
            const auto mv = mean_ci(v2);
            table.rows.push_back({labels[s], snrs[i], "mse_range", mr.mean, mr.ci});
            table.rows.push_back({labels[s], snrs[i], "crb_range", crb.range, 0.0});
            table.rows.push_back({labels[s], snrs[i], "crb_range_oracle", oracle.range, 0.0});
            table.rows.push_back({labels[s], snrs[i], "mse_velocity", mv.mean, mv.ci});
            table.rows.push_back({labels[s], snrs[i], "crb_velocity", crb.velocity, 0.0});
            table.rows.push_back({labels[s], snrs[i], "crb_velocity_oracle", oracle.velocity, 0.0});
            table.rows.push_back({labels[s], snrs[i], "resolved_fraction", resolved / trials, 0.0});
        }
    return table;
}

ResultTable run(const ExperimentSpec& spec)
{
    const auto diag = validate(spec);
    if (!diag.empty())
        throw ConfigError("invalid experiment spec: " + diag.front());
    if (spec.name == "fig3_ici")
        return run_fig3(spec);
    if (spec.name == "fig4_peaks")
        return run_fig4(spec);
    if (spec.name == "fig6_maxmin")
        return run_fig6_maxmin(spec);
    if (spec.name == "fig7_rate_vs_crb")
        return run_fig7(spec);

    const bool range = spec.name == "fig5_range_mse";
    const auto both = single_ue_mse(spec);
    const std::set<std::string> keep =
        range ? std::set<std::string>{"mse_range", "crb_range", "crb_range_oracle", "resolved_fraction"}
              : std::set<std::string>{"mse_velocity", "crb_velocity", "crb_velocity_oracle",
                                      "resolved_fraction"};
    ResultTable table;
    for (const auto& r : both.rows)
        if (keep.count(r.metric))
            table.rows.push_back(r);
    const std::string axis = range ? "range" : "velocity";
    table.plots.push_back(pivot(table, spec.name + ".csv", scheme_labels(spec), spec.snr_grid_db,
                                {"mse_" + axis, "crb_" + axis}));
    return table;
}

std::string to_csv(const ResultTable& table)
{
    std::string out = "scheme,snr_db,metric_name,value,ci_halfwidth\n";
    for (const auto& r : table.rows)
        out += fmt::format("{},{},{},{},{}\n", r.scheme, format_double(r.snr_db), r.metric,
                           format_double(r.value), format_double(r.ci_halfwidth));
    return out;
}

std::string plot_csv(const PlotData& plot)
{
    std::string out = "#";
    for (std::size_t i = 0; i < plot.columns.size(); ++i)
        out += fmt::format(" {}:{}", i + 1, plot.columns[i]);
    out += "\n";
    for (std::size_t i = 0; i < plot.columns.size(); ++i)
        out += (i ? "," : "") + plot.columns[i];
    out += "\n";
    for (const auto& row : plot.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out += (i ? "," : "") + format_double(row[i]);
        out += "\n";
    }
    return out;
}

namespace {

json spec_json(const ExperimentSpec& spec)
{
    json schemes = json::array();
    for (const auto& s : spec.schemes)
        schemes.push_back(s.name());
    json targets = json::array();
    for (const auto& t : spec.targets)
        targets.push_back({{"range", t.range}, {"velocity", t.velocity}, {"aoa", t.aoa}, {"aod", t.aod}});
    json assignments = json::array();
    for (const auto& a : spec.assignments)
        assignments.push_back({{"subcarriers", a.subcarriers}, {"symbols", a.symbols}});
    LabConfig lab;
    lab.system = spec.system;
    lab.music = spec.music;
    const json cfg = json::parse(dump_config(lab));
    return {{"name", spec.name},
            {"trials", spec.trials},
            {"snr_grid_db", spec.snr_grid_db},
            {"seed", spec.seed},
            {"system", cfg.at("system")},
            {"music", cfg.at("music")},
            {"schemes", schemes},
            {"targets", targets},
            {"assignments", assignments},
            {"n_per_ue", spec.n_per_ue},
            {"g_per_ue", spec.g_per_ue},
            {"ici_draws", spec.ici_draws},
            {"ici_velocities", spec.ici_velocities},
            {"ici_subcarriers", spec.ici_subcarriers}};
}

} // namespace

std::uint64_t config_hash(const ExperimentSpec& spec)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : spec_json(spec).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string manifest_json(const ExperimentSpec& spec)
{
    const json m = {{"experiment", spec.name},
                    {"seed", spec.seed},
                    {"trials", spec.trials},
                    {"config_hash", fmt::format("{:016x}", config_hash(spec))},
                    {"version", library_version},
                    {"spec", spec_json(spec)}};
    return m.dump(2) + "\n";
}

void write_outputs(const ExperimentSpec& spec, const ResultTable& table,
                   const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out)
            throw ConfigError("cannot write " + (dir / name).string());
        out << text;
    };
    write("results.csv", to_csv(table));
    write("manifest.json", manifest_json(spec));
    for (const auto& p : table.plots)
        write(p.file, plot_csv(p));
}

} // namespace isac
