#include "isac/schemes.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <numeric>
#include <random>

namespace isac {

std::string SchemeKind::name() const
{
    switch (tag) {
    case Scheme::subband:
        return "subband";
    case Scheme::interleaved:
        return "interleaved";
    case Scheme::edge_first:
        return "edge-first";
    case Scheme::generalized:
        return "generalized:" + std::to_string(seed);
    case Scheme::generalized_preset:
        return "generalized";
    }
    return "unknown";
}

SchemeKind parse_scheme(std::string_view name)
{
    if (name == "subband")
        return {Scheme::subband};
    if (name == "interleaved")
        return {Scheme::interleaved};
    if (name == "edge-first" || name == "edge_first")
        return {Scheme::edge_first};
    if (name == "preset" || name == "generalized")
        return {Scheme::generalized_preset};
    if (name.starts_with("generalized:")) {
        const auto digits = name.substr(12);
        std::uint64_t seed = 0;
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), seed);
        if (ec != std::errc() || ptr != digits.data() + digits.size())
            throw ConfigError("bad generalized seed in '" + std::string(name) + "'");
        return {Scheme::generalized, seed};
    }
    throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

std::vector<SchemeKind> parse_scheme_list(std::string_view arg)
{
    if (arg == "table1")
        return {{Scheme::subband}, {Scheme::interleaved}, {Scheme::edge_first}};
    if (arg == "table2")
        return {{Scheme::subband},
                {Scheme::interleaved},
                {Scheme::edge_first},
                {Scheme::generalized_preset}};
    std::vector<SchemeKind> out;
    std::size_t start = 0;
    while (start <= arg.size()) {
        const auto comma = arg.find(',', start);
        const auto piece = arg.substr(start, comma == std::string_view::npos ? arg.npos : comma - start);
        if (!piece.empty())
            out.push_back(parse_scheme(piece));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    if (out.empty())
        throw ConfigError("empty scheme list");
    return out;
}

const std::vector<std::vector<int>>& generalized_preset_lists()
{
    static const std::vector<std::vector<int>> lists = {
        {1, 2, 5, 8, 9, 13, 16, 17, 19, 25, 26, 29, 34, 36, 38, 41},
        {3, 6, 7, 11, 14, 15, 20, 23, 27, 31, 32, 35, 37, 43, 46, 48},
        {4, 10, 12, 18, 21, 22, 24, 28, 30, 33, 39, 40, 42, 44, 45, 47},
    };
    return lists;
}

std::vector<int> generate_scheme(const SchemeKind& kind, int pool_size, int count, int ue_index,
                                 int n_ues)
{
    if (count < 1 || count > pool_size)
        throw CapacityError("generate_scheme: count must lie in [1, pool_size]");
    if (ue_index < 1 || ue_index > n_ues)
        throw DomainError("generate_scheme: ue_index must lie in [1, n_ues]");
    const int k = ue_index - 1;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count));

    switch (kind.tag) {
    case Scheme::subband: {
        const int offset = k * count;
        if (offset + count > pool_size)
            throw CapacityError("subband: pool too small for this UE");
        for (int i = 1; i <= count; ++i)
            out.push_back(offset + i);
        break;
    }
    case Scheme::interleaved: {
        if (count * n_ues > pool_size)
            throw CapacityError("interleaved: count * n_ues exceeds pool");
        for (int i = 0; i < count; ++i)
            out.push_back(ue_index + i * n_ues);
        break;
    }
    case Scheme::edge_first: {
        if (count * n_ues > pool_size)
            throw CapacityError("edge-first: count * n_ues exceeds pool");
        // Odd counts put the extra index on the low side; UE 1 is the outermost layer.
        const int low = (count + 1) / 2;
        const int high = count / 2;
        const int low_start = k * low + 1;
        const int high_end = pool_size - k * high;
        for (int i = 0; i < low; ++i)
            out.push_back(low_start + i);
        for (int i = high - 1; i >= 0; --i)
            out.push_back(high_end - i);
        break;
    }
    case Scheme::generalized: {
        if (count * n_ues > pool_size)
            throw CapacityError("generalized: count * n_ues exceeds pool");
        std::vector<int> pool(static_cast<std::size_t>(pool_size));
        std::iota(pool.begin(), pool.end(), 1);
        std::mt19937_64 rng(kind.seed);
        std::shuffle(pool.begin(), pool.end(), rng);
        out.assign(pool.begin() + k * count, pool.begin() + (k + 1) * count);
        std::sort(out.begin(), out.end());
        break;
    }
    case Scheme::generalized_preset: {
        const auto& lists = generalized_preset_lists();
        if (pool_size != 48 || count != 16 || n_ues > static_cast<int>(lists.size()))
            throw CapacityError("generalized preset only exists for 3 UEs x 16 of 48");
        out = lists[static_cast<std::size_t>(k)];
        break;
    }
    }
    return out;
}

std::vector<ResourceAssignment> make_assignments(const SchemeKind& subcarrier_scheme,
                                                 const SchemeKind& symbol_scheme, int n_pool,
                                                 int n_per_ue, int g_pool, int g_per_ue,
                                                 int n_ues)
{
    std::vector<ResourceAssignment> out;
    for (int k = 1; k <= n_ues; ++k) {
        ResourceAssignment a;
        a.ue_index = k;
        a.subcarriers = generate_scheme(subcarrier_scheme, n_pool, n_per_ue, k, n_ues);
        a.symbols = generate_scheme(symbol_scheme, g_pool, g_per_ue, k, n_ues);
        out.push_back(std::move(a));
    }
    return out;
}

CrbInputs crb_inputs(const SystemConfig& cfg, const ResourceAssignment& asg, double beta_power,
                     double noise_power)
{
    CrbInputs in;
    in.beta_power = beta_power;
    in.noise_power = noise_power;
    in.n_k = static_cast<int>(asg.n_sub());
    in.g_k = static_cast<int>(asg.n_sym());
    in.subcarrier_spacing = cfg.subcarrier_spacing;
    in.carrier_freq = cfg.carrier_freq;
    in.symbol_duration = cfg.symbol_duration;
    in.zeta_variance = index_variance(asg.subcarriers);
    in.psi_variance = index_variance(asg.symbols);
    in.c = cfg.c;
    return in;
}

double crb_range(const CrbInputs& in)
{
    if (!(in.zeta_variance > 0))
        throw DegenerateError("crb_range: subcarrier index variance is zero");
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return in.c * in.c * in.noise_power /
           (8.0 * in.beta_power * pi2 * in.g_k * in.n_k * in.subcarrier_spacing *
            in.subcarrier_spacing * in.zeta_variance);
}

double crb_velocity(const CrbInputs& in)
{
    if (!(in.psi_variance > 0))
        throw DegenerateError("crb_velocity: symbol index variance is zero");
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double fts = in.carrier_freq * in.symbol_duration;
    return in.c * in.c * in.noise_power /
           (32.0 * in.beta_power * pi2 * in.g_k * in.n_k * fts * fts * in.psi_variance);
}

std::uint64_t binomial(int n, int k)
{
    if (k < 0 || k > n)
        return 0;
    k = std::min(k, n - k);
    unsigned __int128 r = 1;
    for (int i = 1; i <= k; ++i) {
        r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
        if (r > std::numeric_limits<std::uint64_t>::max())
            return std::numeric_limits<std::uint64_t>::max();
    }
    return static_cast<std::uint64_t>(r);
}

ExtremalityReport verify_extremality(int pool_size, int count)
{
    if (count < 1 || count > pool_size)
        throw DomainError("verify_extremality: count must lie in [1, pool_size]");
    const std::uint64_t total = binomial(pool_size, count);
    if (total > enumeration_limit)
        throw CapacityError("verify_extremality: C(pool, count) exceeds the enumeration limit; "
                            "use sampled comparisons instead");

    ExtremalityReport rep;
    rep.pool_size = pool_size;
    rep.count = count;
    rep.n_subsets = total;

    std::vector<int> subset(static_cast<std::size_t>(count));
    std::iota(subset.begin(), subset.end(), 1);
    std::int64_t best_max = std::numeric_limits<std::int64_t>::min();
    std::int64_t best_min = std::numeric_limits<std::int64_t>::max();

    auto record = [](std::vector<std::vector<int>>& sink, std::uint64_t& n,
                     const std::vector<int>& s, bool reset) {
        if (reset) {
            sink.clear();
            n = 0;
        }
        ++n;
        if (sink.size() < attaining_cap)
            sink.push_back(s);
    };

    while (true) {
        const std::int64_t v = scaled_index_variance(subset);
        if (v >= best_max) {
            record(rep.argmax, rep.n_argmax, subset, v > best_max);
            best_max = v;
        }
        if (v <= best_min) {
            record(rep.argmin, rep.n_argmin, subset, v < best_min);
            best_min = v;
        }
        // next combination in lexicographic order
        int i = count - 1;
        while (i >= 0 && subset[static_cast<std::size_t>(i)] == pool_size - count + i + 1)
            --i;
        if (i < 0)
            break;
        ++subset[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < count; ++j)
            subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
    }

    const double n2 = static_cast<double>(count) * count;
    rep.max_variance = static_cast<double>(best_max) / n2;
    rep.min_variance = static_cast<double>(best_min) / n2;
    const auto edge = generate_scheme({Scheme::edge_first}, pool_size, count, 1, 1);
    const auto band = generate_scheme({Scheme::subband}, pool_size, count, 1, 1);
    rep.edge_first_is_max = scaled_index_variance(edge) == best_max;
    rep.subband_is_min = scaled_index_variance(band) == best_min;
    return rep;
}

} // namespace isac
