#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "isac/model.hpp"

namespace isac {

// Subcarrier / sensing-symbol distribution schemes.
//
// `generalized` draws a seeded disjoint uniform sample; `generalized_preset` is the fixed
// three-UE, 16-of-48 instance used by the multi-UE experiments.
enum class Scheme { subband, interleaved, edge_first, generalized, generalized_preset };

struct SchemeKind {
    Scheme tag = Scheme::subband;
    std::uint64_t seed = 0; // only read for Scheme::generalized

    std::string name() const;
    friend bool operator==(const SchemeKind&, const SchemeKind&) = default;
};

// Parses a single name: subband | interleaved | edge-first | generalized:<seed> | preset.
SchemeKind parse_scheme(std::string_view name);

// Parses a CLI scheme argument; `table1` and `table2` expand to the single-UE and
// three-UE scheme sets, anything else resolves to one scheme.
std::vector<SchemeKind> parse_scheme_list(std::string_view arg);

// Ordered 1-based index list for `ue_index` (1-based) out of `n_ues`.
std::vector<int> generate_scheme(const SchemeKind& kind, int pool_size, int count, int ue_index,
                                 int n_ues);

// Assignment for every UE, applying the scheme independently to subcarriers and symbols.
std::vector<ResourceAssignment> make_assignments(const SchemeKind& subcarrier_scheme,
                                                 const SchemeKind& symbol_scheme, int n_pool,
                                                 int n_per_ue, int g_pool, int g_per_ue,
                                                 int n_ues);

// The fixed generalized instance: three UEs, 16 indices each out of 48.
const std::vector<std::vector<int>>& generalized_preset_lists();

struct CrbInputs {
    double beta_power = 1.0; // |β|²
    double noise_power = 1.0;
    int n_k = 16;
    int g_k = 16;
    double subcarrier_spacing = 100e3;
    double carrier_freq = 28e9;
    double symbol_duration = 1.0 / 90e3;
    double zeta_variance = 0.0;
    double psi_variance = 0.0;
    double c = speed_of_light;
};

CrbInputs crb_inputs(const SystemConfig& cfg, const ResourceAssignment& asg, double beta_power,
                     double noise_power);

// c²σ² / (8|β|²π² G_k N_k Δf² ζ̄)  [m²]
double crb_range(const CrbInputs& in);

// c²σ² / (32|β|²π² G_k N_k f_c² T_s² ψ̄)  [(m/s)²]
double crb_velocity(const CrbInputs& in);

struct ExtremalityReport {
    int pool_size = 0;
    int count = 0;
    std::uint64_t n_subsets = 0;
    double max_variance = 0.0;
    double min_variance = 0.0;
    std::uint64_t n_argmax = 0;
    std::uint64_t n_argmin = 0;
    std::vector<std::vector<int>> argmax; // first `attaining_cap` in lexicographic order
    std::vector<std::vector<int>> argmin;
    bool edge_first_is_max = false;
    bool subband_is_min = false;
};

inline constexpr std::uint64_t enumeration_limit = 10'000'000;
inline constexpr std::size_t attaining_cap = 1000;

// C(n, k) saturating at UINT64_MAX.
std::uint64_t binomial(int n, int k);

// Exhaustive scan of every count-subset of {1..pool_size}.
ExtremalityReport verify_extremality(int pool_size, int count);

} // namespace isac
