#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kaft/probe.hpp"

namespace kaft {

// Fraction of probe responses agreeing with the gold answer; larger means
// fewer conflicts.
struct ConflictScore {
    std::string sample_id;
    int n_correct = 0;
    int n_total = 0;  // orderings x responses per ordering
    double score = 0.0;

    bool operator==(const ConflictScore&) const = default;
};

// Conflict-ordered split: subset 0 holds the most-conflicted samples.
struct PartitionedDataset {
    int k = 4;
    std::vector<std::string> ids;  // input (dataset) order
    std::unordered_map<std::string, int> assignment;
    std::vector<std::string> labels;  // size k

    int subset_of(const std::string& id) const;
    std::vector<size_t> subset_sizes() const;
};

// Human labels; index 0 is always the most-conflicted subset.
std::vector<std::string> partition_labels(int k);

std::vector<ConflictScore> compute_scores(std::span<const ProbeResult> results);

// Stable sort ascending by (score, input position); ascending rank r of N goes
// to subset floor(r*k/N), so subset sizes differ by at most one.
PartitionedDataset partition(std::span<const ConflictScore> scores, int k);

struct ScoreReport {
    struct Bin {
        double lo = 0.0;
        double hi = 0.0;
        int count = 0;
    };
    std::vector<Bin> histogram;                   // equal-width bins over [0, 1]
    std::vector<std::pair<double, double>> kde;   // (x, density) at 101 points
    double bandwidth = 0.0;
};

// Histogram plus a Gaussian KDE sampled at 101 points on [0, 1]. Bandwidth by
// Silverman's rule, floored at the sampling step; mass is reflected at both
// boundaries so the density integrates to one on [0, 1].
ScoreReport score_report(std::span<const ConflictScore> scores, int bins);

// JSONL {"id", "n_correct", "n_total", "score"} in input order.
void write_scores(std::span<const ConflictScore> scores, const std::string& path);
std::vector<ConflictScore> load_scores(const std::string& path);

// JSONL {"id", "subset", "label"} in input order.
void write_partition(const PartitionedDataset& partition, const std::string& path);
PartitionedDataset load_partition(const std::string& path);

// Sectioned CSV: "# histogram" (bin_lo,bin_hi,count) then "# kde" (x,density).
void write_report(const ScoreReport& report, const std::string& path);

}  // namespace kaft
