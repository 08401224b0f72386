#include "isac/partition.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "isac/schemes.hpp"

namespace isac {

namespace {

// n_k² · variance and n_k² kept as an exact fraction
struct ExactVariance {
    std::int64_t scaled = 0;
    std::int64_t denom = 1;

    bool less_than(const ExactVariance& o) const
    {
        return static_cast<__int128>(scaled) * o.denom < static_cast<__int128>(o.scaled) * denom;
    }
    double value() const { return static_cast<double>(scaled) / static_cast<double>(denom); }
};

ExactVariance exact_variance(const std::vector<int>& s)
{
    const auto n = static_cast<std::int64_t>(s.size());
    return {scaled_index_variance(s), n * n};
}

ExactVariance min_exact_variance(std::span<const std::vector<int>> subsets)
{
    ExactVariance best = exact_variance(subsets.front());
    for (const auto& s : subsets.subspan(1)) {
        const auto v = exact_variance(s);
        if (v.less_than(best))
            best = v;
    }
    return best;
}

double gap_from(double bound, double min_variance)
{
    if (min_variance <= 0)
        return std::numeric_limits<double>::infinity();
    return bound / min_variance - 1.0;
}

} // namespace

void PartitionInstance::validate() const
{
    if (pool_size < 1 || n_ues < 1)
        throw DomainError("PartitionInstance: pool_size and n_ues must be >= 1");
    if (static_cast<int>(counts.size()) != n_ues)
        throw DimensionError("PartitionInstance: counts must have n_ues entries");
    long total = 0;
    for (int c : counts) {
        if (c < 1)
            throw DomainError("PartitionInstance: every count must be >= 1");
        total += c;
    }
    if (total > pool_size)
        throw CapacityError("PartitionInstance: sum of counts exceeds pool_size");
}

bool PartitionInstance::equal_counts() const
{
    return std::adjacent_find(counts.begin(), counts.end(), std::not_equal_to<>()) == counts.end();
}

VarianceBound variance_bound(const PartitionInstance& instance)
{
    instance.validate();
    const double n = instance.pool_size;
    VarianceBound out;
    out.total_variance = (n * n - 1.0) / 12.0;
    const double scatter = n * out.total_variance;
    long assigned = 0;
    for (int c : instance.counts) {
        out.per_ue.push_back(scatter / (instance.n_ues * static_cast<double>(c)));
        assigned += c;
    }
    out.certified = scatter / static_cast<double>(assigned);
    return out;
}

PartitionSolution interleaved_partition(const PartitionInstance& instance)
{
    instance.validate();
    if (!instance.equal_counts())
        throw ConstraintError("interleaved_partition: requires equal counts");
    const int k = instance.n_ues;
    const int nk = instance.counts.front();
    if (k * nk > instance.pool_size)
        throw CapacityError("interleaved_partition: K * N_k exceeds pool_size");

    PartitionSolution sol;
    for (int ue = 1; ue <= k; ++ue)
        sol.subsets.push_back(generate_scheme({Scheme::interleaved}, instance.pool_size, nk, ue, k));
    sol.min_variance = min_exact_variance(sol.subsets).value();
    sol.bound = variance_bound(instance).certified;
    if (k * nk == instance.pool_size && nk > 1)
        sol.gap = crb_gap(instance.pool_size, k).value();
    else
        sol.gap = gap_from(sol.bound, sol.min_variance);
    return sol;
}

Fraction crb_gap(int n, int k)
{
    if (k < 1 || n < 1)
        throw DomainError("crb_gap: n and k must be >= 1");
    if (k > n)
        throw DomainError("crb_gap: k must not exceed n");
    const std::int64_t kk = static_cast<std::int64_t>(k - 1) * (k + 1);
    const std::int64_t nn = static_cast<std::int64_t>(n - 1) * (n + 1);
    std::int64_t num = kk;
    std::int64_t den = nn - kk;
    if (den == 0)
        throw DomainError("crb_gap: undefined for k == n");
    const std::int64_t g = std::gcd(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    if (num == 0)
        den = 1;
    return {num, den};
}

std::uint64_t multinomial_count(const PartitionInstance& instance)
{
    instance.validate();
    int remaining = instance.pool_size;
    unsigned __int128 total = 1;
    const auto cap = std::numeric_limits<std::uint64_t>::max();
    for (int c : instance.counts) {
        const std::uint64_t b = binomial(remaining, c);
        total *= b;
        if (b == cap || total > cap)
            return cap;
        remaining -= c;
    }
    return static_cast<std::uint64_t>(total);
}

namespace {

struct PartitionWalker {
    const PartitionInstance& inst;
    const std::function<void(std::span<const std::vector<int>>)>& visit;
    std::vector<std::vector<int>> chosen;

    void descend(std::size_t ue, const std::vector<int>& remaining)
    {
        if (ue == inst.counts.size()) {
            visit(chosen);
            return;
        }
        const int count = inst.counts[ue];
        const int avail = static_cast<int>(remaining.size());
        // within a run of equal counts the smallest index must increase
        int min_first = std::numeric_limits<int>::min();
        if (ue > 0 && inst.counts[ue - 1] == count)
            min_first = chosen[ue - 1].front();

        std::vector<int> pos(static_cast<std::size_t>(count));
        std::iota(pos.begin(), pos.end(), 0);
        while (true) {
            if (remaining[static_cast<std::size_t>(pos[0])] > min_first) {
                auto& subset = chosen[ue];
                subset.clear();
                std::vector<int> rest;
                rest.reserve(remaining.size() - static_cast<std::size_t>(count));
                std::size_t p = 0;
                for (int i = 0; i < avail; ++i) {
                    if (p < pos.size() && pos[p] == i) {
                        subset.push_back(remaining[static_cast<std::size_t>(i)]);
                        ++p;
                    } else {
                        rest.push_back(remaining[static_cast<std::size_t>(i)]);
                    }
                }
                descend(ue + 1, rest);
            }
            int i = count - 1;
            while (i >= 0 && pos[static_cast<std::size_t>(i)] == avail - count + i)
                --i;
            if (i < 0)
                break;
            ++pos[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < count; ++j)
                pos[static_cast<std::size_t>(j)] = pos[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
};

} // namespace

void for_each_partition(const PartitionInstance& instance,
                        const std::function<void(std::span<const std::vector<int>>)>& visit)
{
    instance.validate();
    if (multinomial_count(instance) > enumeration_limit)
        throw CapacityError("for_each_partition: instance exceeds the enumeration limit");
    std::vector<int> all(static_cast<std::size_t>(instance.pool_size));
    std::iota(all.begin(), all.end(), 1);
    PartitionWalker walker{instance, visit, std::vector<std::vector<int>>(instance.counts.size())};
    walker.descend(0, all);
}

PartitionSolution exact_partition(const PartitionInstance& instance)
{
    bool have = false;
    ExactVariance best;
    std::vector<std::vector<int>> best_subsets;
    for_each_partition(instance, [&](std::span<const std::vector<int>> subsets) {
        const auto v = min_exact_variance(subsets);
        if (!have || best.less_than(v)) {
            have = true;
            best = v;
            best_subsets.assign(subsets.begin(), subsets.end());
        }
    });
    PartitionSolution sol;
    sol.subsets = std::move(best_subsets);
    sol.min_variance = best.value();
    sol.bound = variance_bound(instance).certified;
    sol.gap = gap_from(sol.bound, sol.min_variance);
    return sol;
}

ScatterDecomposition scatter_decomposition(std::span<const std::vector<int>> subsets)
{
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : subsets)
        for (int x : s) {
            sum += x;
            ++count;
        }
    const double grand = sum / static_cast<double>(count);

    ScatterDecomposition out;
    for (const auto& s : subsets) {
        double mean = 0.0;
        for (int x : s)
            mean += x;
        mean /= static_cast<double>(s.size());
        for (int x : s) {
            out.within += (x - mean) * (x - mean);
            out.total += (x - grand) * (x - grand);
        }
        out.between += static_cast<double>(s.size()) * (mean - grand) * (mean - grand);
    }
    return out;
}

} // namespace isac
