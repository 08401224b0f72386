#include <doctest.h>

#include <random>

#include "isac/rates.hpp"
#include "isac/schemes.hpp"

using namespace isac;

namespace {

ChannelPath moving(double v, double range = 30.0)
{
    ChannelPath p;
    p.radial_velocity = v;
    p.delay = range / speed_of_light;
    p.aoa = 0.8;
    p.aod = 1.2;
    return p;
}

struct Scene {
    SystemConfig cfg;
    std::vector<ResourceAssignment> asg;
    std::vector<UeChannel> ch;
    DataGrid data;
};

Scene scene(const SchemeKind& kind, double v)
{
    Scene s;
    s.cfg = SystemConfig{};
    s.cfg.noise_power = 0.01;
    s.asg = make_assignments(kind, kind, 48, 16, 48, 16, 3);
    for (int k = 0; k < 3; ++k) {
        UeChannel c;
        c.beamformer = uniform_beamformer(2);
        c.paths.push_back(moving(v + 5 * k, 30 + 20 * k));
        s.ch.push_back(c);
    }
    s.data = random_qpsk_grid(s.asg, s.cfg.n_symbols, 4);
    return s;
}

} // namespace

TEST_CASE("ICI closed form matches direct summation")
{
    auto cfg = SystemConfig::make(32, 100e3, 28e9, 0.1, 2, 2, 1, 4);
    for (double v : {0.0, 7.0, 30.0, -45.0, 3000.0}) {
        const auto p = moving(v);
        const auto a = ici_matrix(p, cfg);
        const auto b = ici_matrix_direct(p, cfg);
        CHECK_MESSAGE((a.values - b.values).cwiseAbs().maxCoeff() < 1e-11, "v = " << v);
        CHECK(std::abs(ici_entry(p, cfg, 5, 9) - b.values(4, 8)) < 1e-11);
    }
}

TEST_CASE("zero Doppler gives the exact phase diagonal")
{
    const auto cfg = SystemConfig::make(1024, 100e3, 28e9, 0.1, 2, 2, 1, 4);
    const auto q = ici_matrix(moving(0.0, 75.0), cfg);
    CHECK(q.max_offdiagonal() == 0.0);
    CHECK(q.distance_from_phase_diagonal(cfg) < 1e-12);
}

TEST_CASE("off-diagonal ICI grows with Doppler")
{
    const auto cfg = SystemConfig::make(1024, 100e3, 28e9, 0.1, 2, 2, 1, 4);
    double prev = 0.0;
    for (double v : {10.0, 20.0, 30.0}) {
        const auto q = ici_matrix(moving(v), cfg);
        const double m = q.max_offdiagonal();
        CHECK(m > prev);
        // the worst entry sits next to the diagonal of the last subcarrier
        const double eps = 2 * v / speed_of_light;
        CHECK(m == doctest::Approx(std::abs(std::sin(std::numbers::pi * eps * 1023) /
                                            (1024 * std::sin(std::numbers::pi * (1 - eps * 1023) / 1024))))
                       .epsilon(1e-6));
        prev = m;
    }
}

TEST_CASE("sample-exact symbol demodulates to s^T Q")
{
    const auto cfg = SystemConfig::make(64, 100e3, 28e9, 0.1, 2, 2, 1, 4);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    VectorXcd s(64);
    for (Index i = 0; i < 64; ++i)
        s(i) = cd(n01(rng), n01(rng));
    for (double v : {0.0, 25.0, 900.0}) {
        const auto p = moving(v, 12.0);
        const VectorXcd y = demodulate_exact(sample_exact_symbol(p, cfg, s));
        const VectorXcd expect = (s.transpose() * ici_matrix(p, cfg).values).transpose();
        CHECK((y - expect).norm() < 1e-10 * expect.norm());
    }
    CHECK_THROWS_AS(sample_exact_symbol(moving(0), cfg, VectorXcd::Zero(3)), DimensionError);
}

TEST_CASE("path response")
{
    const SystemConfig cfg;
    UeChannel ch;
    ch.beamformer = uniform_beamformer(2);
    auto p = moving(0);
    p.gain = cd(0.0, 2.0);
    const auto h = path_response(cfg, ch, p);
    CHECK(h.size() == cfg.n_rx_antennas);
    const double om = spatial_phase(p.aod, cfg.antenna_spacing, cfg.wavelength());
    const double tx = std::abs(1.0 + std::polar(1.0, om)) / std::sqrt(2.0);
    for (Index m = 0; m < h.size(); ++m)
        CHECK(std::abs(h(m)) == doctest::Approx(2.0 * tx));
}

TEST_CASE("Monte Carlo ICI power converges to its expectation")
{
    auto s = scene({Scheme::interleaved}, 600.0);
    const auto mc = ici_power_profile(s.cfg, s.ch, s.asg, 3000, 9);
    const auto ex = ici_power_expected(s.cfg, s.ch, s.asg);
    CHECK(ex.maxCoeff() > 0);
    for (Index n = 0; n < ex.size(); ++n)
        CHECK(mc(n) == doctest::Approx(ex(n)).epsilon(0.12));
    CHECK(ici_power(s.cfg, s.ch, s.asg, 5, 3000, 9) == doctest::Approx(mc(4)).epsilon(1e-15));
    CHECK_THROWS_AS(ici_power(s.cfg, s.ch, s.asg, 0, 10, 9), DomainError);
}

TEST_CASE("achievable rates")
{
    auto s = scene({Scheme::interleaved}, 20.0);
    const auto r = achievable_rates(s.cfg, s.ch, s.asg, s.data, {100, 5});
    CHECK(r.rates.rows() == 48);
    CHECK(r.rates.cols() == 48);
    // unit-modulus data: every sensing symbol sees the same rate
    for (Index g = 1; g < 48; ++g)
        CHECK((r.rates.row(g) - r.rates.row(0)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((r.approx_rates.array() >= r.rates.array()).all());
    CHECK(r.sum_rate() > 0);
    CHECK(r.approx_sum_rate() >= r.sum_rate());
    const auto per_ue = r.ue_rates();
    REQUIRE(per_ue.size() == 3);
    CHECK(per_ue[0] + per_ue[1] + per_ue[2] == doctest::Approx(r.sum_rate()));

    // rate of one subcarrier from first principles
    const int z = s.asg[1].subcarriers[3];
    const auto& path = s.ch[1].paths[0];
    const VectorXcd h = path_response(s.cfg, s.ch[1], path) * ici_entry(path, s.cfg, z, z);
    const double expect = std::log2(1.0 + h.squaredNorm() / (s.cfg.noise_power + r.ici_power(z - 1)));
    CHECK(r.rates(0, z - 1) == doctest::Approx(expect).epsilon(1e-12));

    auto noisy = s;
    noisy.cfg.noise_power = 1.0;
    CHECK(achievable_rates(noisy.cfg, noisy.ch, noisy.asg, noisy.data).sum_rate() < r.sum_rate());
    noisy.cfg.noise_power = 0.0;
    CHECK_THROWS_AS(achievable_rates(noisy.cfg, noisy.ch, noisy.asg, noisy.data), DomainError);

    auto clash = s;
    clash.asg[1].subcarriers[0] = clash.asg[0].subcarriers[0];
    CHECK_THROWS_AS(achievable_rates(clash.cfg, clash.ch, clash.asg, clash.data), OverlapError);
}

TEST_CASE("sum rate is insensitive to the distribution scheme")
{
    std::vector<double> sums;
    for (const auto& kind : parse_scheme_list("table2")) {
        auto s = scene(kind, 20.0);
        sums.push_back(achievable_rates(s.cfg, s.ch, s.asg, s.data, {100, 1}).sum_rate());
    }
    const auto [lo, hi] = std::minmax_element(sums.begin(), sums.end());
    CHECK((*hi - *lo) / *lo < 1e-6);
}
