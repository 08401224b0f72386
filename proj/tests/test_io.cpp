#include <doctest.h>

#include <fstream>

#include "isac/io.hpp"

using namespace isac;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / "isac_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

constexpr const char* sample_config = R"({
  "system": {"n_subcarriers": 32, "subcarrier_spacing": 120e3, "carrier_freq": 26e9,
             "cp_duration": 1e-6, "n_rx_antennas": 4, "n_tx_antennas": 2, "n_ues": 2,
             "n_symbols": 20, "noise_power": 0.5},
  "ues": [
    {"subcarriers": [1, 3, 5, 7], "symbols": [1, 2, 3],
     "paths": [{"gain": [0.5, -0.5], "range": 42.0, "velocity": -7.5, "aoa": 0.4, "aod": 1.0}]},
    {"subcarriers": [2, 4, 6, 8], "symbols": [4, 5, 6],
     "beamformer": [[1, 0], [0, 0]],
     "paths": [{"delay": 2e-7, "velocity": 3}]}
  ],
  "music": {"range": [0, 100, 0.5], "velocity": [-20, 20, 0.25], "smoothing": "off"}
})";

} // namespace

TEST_CASE("config parsing")
{
    const auto lab = parse_config(sample_config);
    CHECK(lab.system.n_subcarriers == 32);
    CHECK(lab.system.sample_duration == doctest::Approx(1.0 / (32 * 120e3)));
    CHECK(lab.system.symbol_duration == doctest::Approx(1e-6 + 1.0 / 120e3));
    CHECK_NOTHROW(lab.system.validate());
    REQUIRE(lab.assignments.size() == 2);
    CHECK(lab.assignments[1].ue_index == 2);
    CHECK(lab.channels[0].paths[0].range() == doctest::Approx(42.0));
    CHECK(lab.channels[0].paths[0].gain == cd(0.5, -0.5));
    CHECK(lab.channels[1].paths[0].delay == doctest::Approx(2e-7));
    CHECK(lab.channels[0].beamformer.size() == 2);
    CHECK(lab.channels[1].beamformer(0) == cd(1.0));
    REQUIRE(lab.music.has_value());
    CHECK(lab.music->range.step == 0.5);
    CHECK(lab.music->smoothing == Smoothing::off);

    CHECK(parse_config("{}").assignments.empty());
}

TEST_CASE("config round trip")
{
    const auto lab = parse_config(sample_config);
    const auto again = parse_config(dump_config(lab));
    CHECK(dump_config(again) == dump_config(lab));
    CHECK(again.assignments[0].subcarriers == lab.assignments[0].subcarriers);
    CHECK(again.channels[0].paths[0].radial_velocity == lab.channels[0].paths[0].radial_velocity);
    CHECK(again.system.symbol_duration == doctest::Approx(lab.system.symbol_duration).epsilon(1e-15));
}

TEST_CASE("config errors")
{
    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"ues": [{"subcarriers": [1, 1], "symbols": [1]}]})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"ues": [{"subcarriers": [1], "symbols": [1],
        "paths": [{"range": 1, "delay": 1e-9}]}]})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"music": {"smoothing": "maybe"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"music": {"range": [0, 1]}})"), ConfigError);
    CHECK_THROWS_AS(load_config(scratch("missing.json")), ConfigError);
}

TEST_CASE("block dump round trip")
{
    std::vector<MatrixXcd> blocks(3, MatrixXcd(2, 5));
    for (std::size_t b = 0; b < blocks.size(); ++b)
        for (Index i = 0; i < 10; ++i)
            blocks[b](i) = cd(0.1 * i + b, -0.37 * i);
    const auto path = scratch("blocks.bin");
    write_blocks(path, blocks);
    CHECK(fs::file_size(path) == 8 + 16 + 3 * 10 * 8);

    std::ifstream raw(path, std::ios::binary);
    char magic[8];
    raw.read(magic, 8);
    CHECK(std::string(magic, 7) == "ISACBLK");
    unsigned char version[4];
    raw.read(reinterpret_cast<char*>(version), 4);
    CHECK(version[0] == 1);
    CHECK(version[1] == 0);

    const auto back = read_blocks(path);
    REQUIRE(back.size() == 3);
    for (std::size_t b = 0; b < 3; ++b)
        CHECK((back[b] - blocks[b]).cwiseAbs().maxCoeff() < 1e-6);

    std::vector<MatrixXcd> ragged{MatrixXcd::Zero(2, 2), MatrixXcd::Zero(3, 2)};
    CHECK_THROWS_AS(write_blocks(scratch("ragged.bin"), ragged), DimensionError);

    std::ofstream(scratch("junk.bin")) << "definitely not a dump";
    CHECK_THROWS_AS(read_blocks(scratch("junk.bin")), ConfigError);
}

TEST_CASE("CSI dump with sidecar")
{
    CsiDump d;
    d.assignment = {1, {1, 4, 7}, {2, 3}};
    d.antennas = 2;
    d.snr_db = 15;
    d.seed = 77;
    d.truths = {{30, 10}, {31, 11}};
    for (int i = 0; i < 4; ++i)
        d.blocks.push_back(MatrixXcd::Constant(2, 3, cd(i, 1)));
    const auto path = scratch("csi.bin");
    write_csi_dump(path, d);
    CHECK(fs::exists(sidecar_path(path)));
    CHECK(sidecar_path(path).string() == path.string() + ".json");

    const auto back = read_csi_dump(path);
    CHECK(back.assignment.subcarriers == d.assignment.subcarriers);
    CHECK(back.antennas == 2);
    CHECK(back.seed == 77);
    REQUIRE(back.truths.size() == 2);
    CHECK(back.truths[1].velocity == 11);
    CHECK(back.blocks.size() == 4);
    CHECK(back.blocks[3](1, 2) == cd(3, 1));

    d.blocks.pop_back();
    CHECK_THROWS_AS(write_csi_dump(scratch("bad.bin"), d), DimensionError);
}
