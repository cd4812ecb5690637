#pragma once

#include <span>
#include <string>
#include <vector>

#include "kaft/dataset.hpp"
#include "kaft/probe.hpp"
#include "kaft/scoring.hpp"

namespace kaft {

// How training rewards are derived from the conflict partition.
//   kaft      — subset-keyed rewards (alpha, beta, 1, 1) on a k=4 partition
//   constant  — one reward for every sample
//   auto_adapt— the sample's conflict score (zero mapped to `floor`)
//   k_subsets — caller-supplied reward per subset, ascending conflict order
struct RewardPolicy {
    enum class Kind { kaft, constant, auto_adapt, k_subsets };

    Kind kind = Kind::kaft;
    double alpha = 0.1;
    double beta = 0.5;
    double constant_value = 1.0;
    double floor = 0.01;
    std::vector<double> subset_rewards;

    static RewardPolicy parse(const std::string& name);
};

struct RewardedSample {
    QASample sample;
    int subset = 0;
    double reward = 1.0;

    bool operator==(const RewardedSample&) const = default;
};

struct CurationConfig {
    enum class Baseline { vanilla, no_conflict, self_aligning, kaft, wrong_mix };

    Baseline baseline = Baseline::kaft;
    double lambda = 0.0;  // wrong_mix: kept fraction of the most-conflicted subset
    uint64_t seed = 0;
    RewardPolicy policy;  // used by the kaft baseline

    static Baseline parse_baseline(const std::string& name);
};

// One reward per sample, dataset order preserved.
std::vector<RewardedSample> assign_rewards(const Dataset& dataset,
                                           const PartitionedDataset& partition,
                                           std::span<const ConflictScore> scores,
                                           const RewardPolicy& policy);

// Training-set builders. The probe cache supplies the greedy responses that
// self_aligning rewrites answers with; `fingerprint` selects the probe run.
std::vector<RewardedSample> build_baseline(const Dataset& dataset,
                                           const PartitionedDataset& partition,
                                           std::span<const ConflictScore> scores,
                                           const ProbeCache& cache, const std::string& fingerprint,
                                           const CurationConfig& config);

// Formats:
//   weighted-jsonl-v1    {"id","question","options","answer_index","subset","reward"[,"meta"]}
//   prompt-completion-v1 {"prompt","completion","reward"} via the zero-shot template
constexpr const char* kWeightedJsonlV1 = "weighted-jsonl-v1";
constexpr const char* kPromptCompletionV1 = "prompt-completion-v1";

void export_weighted(std::span<const RewardedSample> samples, const std::string& path,
                     const std::string& format = kWeightedJsonlV1);
std::vector<RewardedSample> load_weighted(const std::string& path);

}  // namespace kaft
