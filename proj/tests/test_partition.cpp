#include <doctest.h>

#include <numeric>
#include <set>

#include "isac/partition.hpp"
#include "isac/schemes.hpp"

using namespace isac;

namespace {

struct Rational {
    std::int64_t num, den;
};

Rational reduce(std::int64_t num, std::int64_t den)
{
    const auto g = std::gcd(num, den);
    return {num / g, den / g};
}

// (CRB_I − CRB_low)/CRB_low from the two variances, as exact rationals: the bound
// (N² − 1)/12 over the interleaved variance K²(N_k² − 1)/12, minus one.
Rational independent_gap(std::int64_t n, std::int64_t k)
{
    const std::int64_t nk = n / k;
    const std::int64_t bound12 = n * n - 1;
    const std::int64_t inter12 = k * k * (nk * nk - 1);
    return reduce(bound12 - inter12, inter12);
}

double min_var(std::span<const std::vector<int>> subsets)
{
    double m = 1e300;
    for (const auto& s : subsets)
        m = std::min(m, index_variance(s));
    return m;
}

} // namespace

TEST_CASE("variance bound")
{
    const auto b = variance_bound({48, 3, {16, 16, 16}});
    CHECK(b.total_variance == doctest::Approx((48.0 * 48 - 1) / 12));
    CHECK(b.certified == doctest::Approx(191.9166666666667));
    REQUIRE(b.per_ue.size() == 3);
    CHECK(b.per_ue[0] == doctest::Approx(b.certified));
    const auto single = variance_bound({10, 1, {10}});
    CHECK(single.certified == doctest::Approx(single.total_variance));
}

TEST_CASE("certified bound holds where the smallest per-UE bound does not")
{
    // unequal counts: the best partition beats min_k N ε_t/(K N_k)
    const PartitionInstance inst{12, 2, {2, 10}};
    const auto b = variance_bound(inst);
    const auto sol = exact_partition(inst);
    const double smallest = *std::min_element(b.per_ue.begin(), b.per_ue.end());
    CHECK(sol.min_variance > smallest);
    CHECK(sol.min_variance <= b.certified + 1e-12);
}

TEST_CASE("interleaved partition")
{
    const auto sol = interleaved_partition({48, 3, {16, 16, 16}});
    REQUIRE(sol.subsets.size() == 3);
    CHECK(sol.subsets[1].front() == 2);
    CHECK(sol.subsets[2].back() == 48);
    for (const auto& s : sol.subsets)
        CHECK(index_variance(s) == doctest::Approx(191.25));
    CHECK(sol.min_variance == doctest::Approx(191.25));
    CHECK(sol.min_variance <= sol.bound);

    const auto six = interleaved_partition({6, 2, {3, 3}});
    CHECK(six.subsets[0] == std::vector<int>{1, 3, 5});
    CHECK(six.min_variance == doctest::Approx(8.0 / 3.0));

    CHECK_THROWS_AS(interleaved_partition({9, 2, {3, 4}}), ConstraintError);
    CHECK_THROWS_AS(interleaved_partition({9, 3, {4, 4, 4}}), CapacityError);
}

TEST_CASE("gap closed form")
{
    CHECK(crb_gap(48, 3) == Fraction{8, 2295});
    const auto ind = independent_gap(48, 3);
    CHECK(ind.num == 8);
    CHECK(ind.den == 2295);
    const auto sol = interleaved_partition({48, 3, {16, 16, 16}});
    CHECK(std::abs(sol.bound / sol.min_variance - 1.0 - 8.0 / 2295) < 1e-12);

    const auto big = crb_gap(1024, 20);
    CHECK(big.value() == doctest::Approx(399.0 / 1048176).epsilon(1e-14));
    CHECK(big.value() == doctest::Approx(3.806e-4).epsilon(1e-3));
    const auto big_ind = independent_gap(1020, 20); // K | N variant of the oracle
    CHECK(crb_gap(1020, 20).num == big_ind.num);
    CHECK(crb_gap(1020, 20).den == big_ind.den);

    CHECK(crb_gap(10, 1).value() == 0.0);
    CHECK_THROWS_AS(crb_gap(3, 4), DomainError);
    CHECK_THROWS_AS(crb_gap(0, 0), DomainError);
}

TEST_CASE("exact partition small instances")
{
    const auto four = exact_partition({4, 2, {2, 2}});
    CHECK(four.min_variance == doctest::Approx(1.0));
    CHECK(four.subsets[0] == std::vector<int>{1, 3});
    CHECK(four.subsets[1] == std::vector<int>{2, 4});

    const auto six = exact_partition({6, 2, {3, 3}});
    CHECK(six.min_variance >= 8.0 / 3.0 - 1e-12);
    CHECK(six.min_variance <= six.bound);

    int visits = 0;
    for_each_partition({6, 2, {3, 3}}, [&](std::span<const std::vector<int>>) { ++visits; });
    CHECK(visits == 10);
    visits = 0;
    for_each_partition({4, 2, {2, 2}}, [&](std::span<const std::vector<int>>) { ++visits; });
    CHECK(visits == 3);

    // leftover indices stay unassigned
    const auto partial = exact_partition({7, 2, {2, 2}});
    CHECK(partial.min_variance == doctest::Approx(6.25)); // {1,6} and {2,7}
    std::set<int> used;
    for (const auto& s : partial.subsets)
        used.insert(s.begin(), s.end());
    CHECK(used.size() == 4);

    CHECK(multinomial_count({9, 3, {3, 3, 3}}) == 1680);
    CHECK_THROWS_AS(exact_partition({48, 3, {16, 16, 16}}), CapacityError);
    CHECK_THROWS_AS(variance_bound({5, 2, {3, 3}}), CapacityError);
    CHECK_THROWS_AS(variance_bound({5, 2, {3}}), DimensionError);
}

TEST_CASE("exact optimum is bracketed by interleaved and the bound")
{
    for (const PartitionInstance inst : {PartitionInstance{8, 2, {4, 4}}, PartitionInstance{9, 3, {3, 3, 3}},
                                         PartitionInstance{10, 2, {5, 5}}, PartitionInstance{12, 3, {4, 4, 4}}}) {
        const auto exact = exact_partition(inst);
        const auto inter = interleaved_partition(inst);
        CHECK(exact.min_variance >= inter.min_variance - 1e-12);
        CHECK(exact.min_variance <= variance_bound(inst).certified + 1e-12);
    }
}

TEST_CASE("every enumerated partition respects the bound and the scatter identity")
{
    for (const PartitionInstance inst : {PartitionInstance{8, 2, {4, 4}}, PartitionInstance{9, 3, {3, 3, 3}}}) {
        const auto bound = variance_bound(inst);
        long count = 0;
        bool ok_bound = true, ok_identity = true;
        for_each_partition(inst, [&](std::span<const std::vector<int>> subsets) {
            ++count;
            for (std::size_t k = 0; k < subsets.size(); ++k)
                ok_bound = ok_bound && min_var(subsets) <= bound.per_ue[k] + 1e-12;
            const auto d = scatter_decomposition(subsets);
            ok_identity = ok_identity && std::abs(d.total - d.within - d.between) <= 1e-9;
        });
        CHECK(ok_bound);
        CHECK(ok_identity);
        // unordered partitions: multinomial / K! for equal counts
        CHECK(count == static_cast<long>(multinomial_count(inst)) / (inst.n_ues == 2 ? 2 : 6));
    }
}

TEST_CASE("interleaved shifts are best within the shift family")
{
    // K = 2, N = 8, 4 indices each: subset 2 is subset 1 moved by η
    double best = -1;
    for (unsigned mask = 0; mask < 256; ++mask) {
        if (__builtin_popcount(mask) != 4)
            continue;
        std::vector<int> s;
        for (int i = 0; i < 8; ++i)
            if (mask >> i & 1u)
                s.push_back(i + 1);
        for (int eta = 1; eta < 8; ++eta) {
            std::set<int> both(s.begin(), s.end());
            bool fits = true;
            for (int x : s)
                fits = fits && x + eta <= 8 && both.insert(x + eta).second;
            if (fits)
                best = std::max(best, index_variance(s));
        }
    }
    CHECK(best == doctest::Approx(interleaved_partition({8, 2, {4, 4}}).min_variance));
}
