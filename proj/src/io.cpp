#include "isac/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace isac {

using nlohmann::json;

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out)
{
    if (j.contains(key))
        out = j.at(key).get<T>();
}

cd complex_from(const json& j)
{
    if (j.is_number())
        return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2)
        return {j[0].get<double>(), j[1].get<double>()};
    throw ConfigError("expected a number or [re, im] pair");
}

json complex_to(cd z)
{
    return json::array({z.real(), z.imag()});
}

SystemConfig system_from(const json& j, SystemConfig cfg)
{
    read_opt(j, "n_subcarriers", cfg.n_subcarriers);
    read_opt(j, "subcarrier_spacing", cfg.subcarrier_spacing);
    read_opt(j, "carrier_freq", cfg.carrier_freq);
    read_opt(j, "n_rx_antennas", cfg.n_rx_antennas);
    read_opt(j, "n_tx_antennas", cfg.n_tx_antennas);
    read_opt(j, "n_ues", cfg.n_ues);
    read_opt(j, "n_symbols", cfg.n_symbols);
    read_opt(j, "noise_power", cfg.noise_power);
    read_opt(j, "cp_duration", cfg.cp_duration);
    if (cfg.n_subcarriers < 1 || !(cfg.subcarrier_spacing > 0) || !(cfg.carrier_freq > 0))
        throw ConfigError("system: n_subcarriers, subcarrier_spacing and carrier_freq must be positive");
    cfg.sample_duration = 1.0 / (cfg.n_subcarriers * cfg.subcarrier_spacing);
    cfg.symbol_duration = cfg.cp_duration + cfg.n_subcarriers * cfg.sample_duration;
    cfg.antenna_spacing = 0.5 * cfg.wavelength();
    read_opt(j, "antenna_spacing", cfg.antenna_spacing);
    cfg.validate();
    return cfg;
}

json system_to(const SystemConfig& cfg)
{
    return {{"n_subcarriers", cfg.n_subcarriers},
            {"subcarrier_spacing", cfg.subcarrier_spacing},
            {"carrier_freq", cfg.carrier_freq},
            {"cp_duration", cfg.cp_duration},
            {"n_rx_antennas", cfg.n_rx_antennas},
            {"n_tx_antennas", cfg.n_tx_antennas},
            {"n_ues", cfg.n_ues},
            {"n_symbols", cfg.n_symbols},
            {"antenna_spacing", cfg.antenna_spacing},
            {"noise_power", cfg.noise_power}};
}

ChannelPath path_from(const json& j, double c)
{
    ChannelPath p;
    if (j.contains("gain"))
        p.gain = complex_from(j.at("gain"));
    if (j.contains("range") && j.contains("delay"))
        throw ConfigError("path: give either range or delay, not both");
    if (j.contains("range"))
        p.delay = j.at("range").get<double>() / c;
    read_opt(j, "delay", p.delay);
    read_opt(j, "velocity", p.radial_velocity);
    read_opt(j, "aoa", p.aoa);
    read_opt(j, "aod", p.aod);
    p.validate();
    return p;
}

json path_to(const ChannelPath& p)
{
    return {{"gain", complex_to(p.gain)},
            {"delay", p.delay},
            {"velocity", p.radial_velocity},
            {"aoa", p.aoa},
            {"aod", p.aod}};
}

json assignment_to(const ResourceAssignment& a)
{
    return {{"ue_index", a.ue_index}, {"subcarriers", a.subcarriers}, {"symbols", a.symbols}};
}

ResourceAssignment assignment_from(const json& j, int ue_index)
{
    ResourceAssignment a;
    a.ue_index = j.value("ue_index", ue_index);
    read_opt(j, "subcarriers", a.subcarriers);
    read_opt(j, "symbols", a.symbols);
    return a;
}

GridAxis axis_from(const json& j)
{
    if (!j.is_array() || j.size() != 3)
        throw ConfigError("music grid axes are [min, max, step]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void put_u32(std::ostream& out, std::uint32_t v)
{
    const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                   static_cast<char>((v >> 16) & 0xff),
                                   static_cast<char>((v >> 24) & 0xff)};
    out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in)
{
    std::array<unsigned char, 4> b{};
    in.read(reinterpret_cast<char*>(b.data()), 4);
    if (!in)
        throw ConfigError("block dump: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

constexpr std::array<char, 8> magic = {'I', 'S', 'A', 'C', 'B', 'L', 'K', '\0'};

void write_json(const std::filesystem::path& path, const json& j)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

} // namespace

LabConfig parse_config(std::string_view json_text)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    try {
        LabConfig cfg;
        if (root.contains("system"))
            cfg.system = system_from(root.at("system"), cfg.system);
        if (root.contains("ues")) {
            int k = 1;
            for (const auto& ue : root.at("ues")) {
                auto asg = assignment_from(ue, k);
                asg.validate(cfg.system.n_subcarriers, cfg.system.n_symbols);
                cfg.assignments.push_back(std::move(asg));
                UeChannel ch;
                ch.beamformer = uniform_beamformer(cfg.system.n_tx_antennas);
                if (ue.contains("beamformer")) {
                    const auto& b = ue.at("beamformer");
                    ch.beamformer.resize(static_cast<Index>(b.size()));
                    for (std::size_t i = 0; i < b.size(); ++i)
                        ch.beamformer(static_cast<Index>(i)) = complex_from(b[i]);
                }
                if (ue.contains("paths"))
                    for (const auto& p : ue.at("paths"))
                        ch.paths.push_back(path_from(p, cfg.system.c));
                ch.validate(cfg.system.n_tx_antennas);
                cfg.channels.push_back(std::move(ch));
                ++k;
            }
        }
        if (root.contains("music")) {
            const auto& m = root.at("music");
            MusicConfig mc;
            if (m.contains("range"))
                mc.range = axis_from(m.at("range"));
            if (m.contains("velocity"))
                mc.velocity = axis_from(m.at("velocity"));
            read_opt(m, "n_sources", mc.n_sources);
            read_opt(m, "freq_sub", mc.freq_sub);
            read_opt(m, "time_sub", mc.time_sub);
            const auto smoothing = m.value("smoothing", std::string("auto"));
            if (smoothing == "auto")
                mc.smoothing = Smoothing::automatic;
            else if (smoothing == "on")
                mc.smoothing = Smoothing::on;
            else if (smoothing == "off")
                mc.smoothing = Smoothing::off;
            else
                throw ConfigError("music.smoothing must be auto, on or off");
            mc.validate();
            cfg.music = mc;
        }
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

LabConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const LabConfig& config)
{
    json root;
    root["system"] = system_to(config.system);
    json ues = json::array();
    for (std::size_t k = 0; k < config.assignments.size(); ++k) {
        json ue = assignment_to(config.assignments[k]);
        if (k < config.channels.size()) {
            const auto& ch = config.channels[k];
            json bf = json::array();
            for (Index i = 0; i < ch.beamformer.size(); ++i)
                bf.push_back(complex_to(ch.beamformer(i)));
            ue["beamformer"] = bf;
            json paths = json::array();
            for (const auto& p : ch.paths)
                paths.push_back(path_to(p));
            ue["paths"] = paths;
        }
        ues.push_back(ue);
    }
    root["ues"] = ues;
    if (config.music) {
        const auto& m = *config.music;
        const char* smoothing = m.smoothing == Smoothing::on ? "on" : m.smoothing == Smoothing::off ? "off" : "auto";
        root["music"] = {{"range", {m.range.min, m.range.max, m.range.step}},
                         {"velocity", {m.velocity.min, m.velocity.max, m.velocity.step}},
                         {"n_sources", m.n_sources},
                         {"freq_sub", m.freq_sub},
                         {"time_sub", m.time_sub},
                         {"smoothing", smoothing}};
    }
    return root.dump(2);
}

void write_blocks(const std::filesystem::path& path, std::span<const MatrixXcd> blocks)
{
    const Index rows = blocks.empty() ? 0 : blocks.front().rows();
    const Index cols = blocks.empty() ? 0 : blocks.front().cols();
    for (const auto& b : blocks)
        if (b.rows() != rows || b.cols() != cols)
            throw DimensionError("write_blocks: every block must share one shape");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out.write(magic.data(), magic.size());
    put_u32(out, dump_version);
    put_u32(out, static_cast<std::uint32_t>(blocks.size()));
    put_u32(out, static_cast<std::uint32_t>(rows));
    put_u32(out, static_cast<std::uint32_t>(cols));
    for (const auto& b : blocks)
        for (Index r = 0; r < rows; ++r)
            for (Index c = 0; c < cols; ++c) {
                put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(b(r, c).real())));
                put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(b(r, c).imag())));
            }
    if (!out)
        throw ConfigError("write failed for " + path.string());
}

std::vector<MatrixXcd> read_blocks(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open " + path.string());
    std::array<char, 8> head{};
    in.read(head.data(), head.size());
    if (!in || head != magic)
        throw ConfigError(path.string() + ": not a block dump");
    const auto version = get_u32(in);
    if (version != dump_version)
        throw ConfigError(path.string() + ": unsupported dump version " + std::to_string(version));
    const auto n = get_u32(in);
    const auto rows = static_cast<Index>(get_u32(in));
    const auto cols = static_cast<Index>(get_u32(in));
    std::vector<MatrixXcd> blocks(n, MatrixXcd(rows, cols));
    for (auto& b : blocks)
        for (Index r = 0; r < rows; ++r)
            for (Index c = 0; c < cols; ++c) {
                const float re = std::bit_cast<float>(get_u32(in));
                const float im = std::bit_cast<float>(get_u32(in));
                b(r, c) = cd(re, im);
            }
    return blocks;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path)
{
    return std::filesystem::path(path.string() + ".json");
}

void write_csi_dump(const std::filesystem::path& path, const CsiDump& dump)
{
    if (dump.antennas < 1 ||
        dump.blocks.size() != dump.truths.size() * static_cast<std::size_t>(dump.antennas))
        throw DimensionError("write_csi_dump: need antennas blocks per trial");
    write_blocks(path, dump.blocks);
    json truths = json::array();
    for (const auto& t : dump.truths)
        truths.push_back({{"range", t.range}, {"velocity", t.velocity}});
    write_json(sidecar_path(path), {{"kind", "csi"},
                                    {"version", dump_version},
                                    {"system", system_to(dump.system)},
                                    {"assignment", assignment_to(dump.assignment)},
                                    {"antennas", dump.antennas},
                                    {"snr_db", dump.snr_db},
                                    {"seed", dump.seed},
                                    {"truths", truths}});
}

CsiDump read_csi_dump(const std::filesystem::path& path)
{
    const json meta = read_json(sidecar_path(path));
    try {
        if (meta.at("kind").get<std::string>() != "csi")
            throw ConfigError(path.string() + ": sidecar does not describe CSI");
        CsiDump d;
        d.system = system_from(meta.at("system"), SystemConfig{});
        d.assignment = assignment_from(meta.at("assignment"), 1);
        d.antennas = meta.at("antennas").get<int>();
        d.snr_db = meta.value("snr_db", 0.0);
        d.seed = meta.value("seed", std::uint64_t{0});
        for (const auto& t : meta.at("truths"))
            d.truths.push_back({t.at("range").get<double>(), t.at("velocity").get<double>()});
        d.blocks = read_blocks(path);
        if (d.antennas < 1 ||
            d.blocks.size() != d.truths.size() * static_cast<std::size_t>(d.antennas))
            throw ConfigError(path.string() + ": block count does not match the sidecar");
        for (const auto& b : d.blocks)
            if (b.rows() != d.assignment.n_sym() || b.cols() != d.assignment.n_sub())
                throw ConfigError(path.string() + ": block shape does not match the assignment");
        return d;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_frame_dump(const std::filesystem::path& path, const SystemConfig& cfg,
                      const OfdmaFrameSet& frames)
{
    write_blocks(path, frames.frames);
    write_json(sidecar_path(path), {{"kind", "frames"},
                                    {"version", dump_version},
                                    {"system", system_to(cfg)},
                                    {"seed", frames.rng_seed}});
}

} // namespace isac
