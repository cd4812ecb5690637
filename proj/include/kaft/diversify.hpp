#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kaft/dataset.hpp"

namespace kaft {

// Option reordering. mapping[target_slot] = source option index, a bijection
// on {0..len-1}.
struct Permutation {
    std::vector<int> mapping;

    bool is_identity() const;
    bool operator==(const Permutation&) const = default;
};

struct ProbeConfig {
    int n_orders = 10;        // option orderings per sample
    int n_responses = 10;     // sampled responses per ordering
    double temperature = 0.7;
    int few_shot_k = 3;
    uint64_t seed = 0;
    int max_tokens = 16;
    std::string style = "icl-mc-v1";
};

struct DiversifiedQuery {
    std::string sample_id;
    int variant_index = 0;
    Permutation permutation;
    int remapped_answer_index = 0;  // slot holding the gold option
    std::string prompt;
};

// min(n_orders, option_count!) pairwise-distinct permutations, identity first,
// the rest drawn uniformly without replacement. Deterministic for fixed
// (option_count, n_orders, seed).
std::vector<Permutation> make_permutations(int option_count, int n_orders, uint64_t seed);

// One query per permutation; the permutation seed is derived from
// (config.seed, sample.id) so every sample gets its own orderings.
std::vector<DiversifiedQuery> diversify_sample(const QASample& sample, const ProbeConfig& config,
                                               std::span<const QASample> few_shot);

// k distinct samples drawn from a seeded global pool ordering, skipping
// exclude_id. Targets whose id is outside the drawn prefix share examples.
std::vector<QASample> pick_few_shot(const Dataset& dataset, int k, uint64_t seed,
                                    const std::string& exclude_id);

// The pool ordering behind pick_few_shot, reusable across many targets.
std::vector<size_t> few_shot_pool(const Dataset& dataset, uint64_t seed);
std::vector<QASample> select_few_shot(const Dataset& dataset, std::span<const size_t> pool, int k,
                                      const std::string& exclude_id);

}  // namespace kaft
