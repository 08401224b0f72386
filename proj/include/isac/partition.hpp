#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "isac/model.hpp"

namespace isac {

// Partition of {1..pool_size} into n_ues disjoint subsets of prescribed sizes.
// Indices left over when Σ counts < pool_size stay unassigned.
struct PartitionInstance {
    int pool_size = 0;
    int n_ues = 0;
    std::vector<int> counts;

    void validate() const;
    bool equal_counts() const;
};

struct PartitionSolution {
    std::vector<std::vector<int>> subsets;
    double min_variance = 0.0; // ε
    double bound = 0.0;        // certified upper bound on ε
    double gap = 0.0;          // bound / ε − 1, i.e. the relative max-CRB gap to CRB_low
};

struct VarianceBound {
    double total_variance = 0.0;  // ε_t = (N² − 1)/12
    std::vector<double> per_ue;   // N ε_t / (K N_k)
    double certified = 0.0;       // N ε_t / Σ_k N_k
};

VarianceBound variance_bound(const PartitionInstance& instance);

// Subset k = {k, k+K, k+2K, …}. Requires equal counts with K·N_k ≤ N.
PartitionSolution interleaved_partition(const PartitionInstance& instance);

// (K−1)(K+1) / [(N−1)(N+1) − (K−1)(K+1)] as an exact fraction.
struct Fraction {
    std::int64_t num = 0;
    std::int64_t den = 1;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Fraction&, const Fraction&) = default;
};
Fraction crb_gap(int n, int k);

// Number of ordered assignments N! / (N_1! ⋯ N_K! (N − ΣN_k)!), saturating.
std::uint64_t multinomial_count(const PartitionInstance& instance);

// Visits every partition once up to relabelling of UEs with equal counts: within a run
// of equal counts, subsets are ordered by their smallest index. Visiting order is
// lexicographic on the subset list.
void for_each_partition(const PartitionInstance& instance,
                        const std::function<void(std::span<const std::vector<int>>)>& visit);

// Global max-min variance by exhaustive enumeration. Ties resolve to the
// lexicographically smallest subset list.
PartitionSolution exact_partition(const PartitionInstance& instance);

// Σ_n (n − n̄)² split into within-subset and between-subset sums of squares
// over the indices covered by `subsets`.
struct ScatterDecomposition {
    double total = 0.0;
    double within = 0.0;
    double between = 0.0;
};
ScatterDecomposition scatter_decomposition(std::span<const std::vector<int>> subsets);

} // namespace isac
