#pragma once

#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kaft/backend.hpp"
#include "kaft/dataset.hpp"
#include "kaft/diversify.hpp"

namespace kaft {

struct ResponseRecord {
    std::string raw;
    std::optional<int> extracted;  // absent when unparseable
    bool correct = false;          // extracted present and equal to the gold slot

    bool operator==(const ResponseRecord&) const = default;
};

struct VariantResult {
    int variant_index = 0;
    int remapped_answer_index = 0;
    int option_count = 0;
    std::vector<ResponseRecord> responses;

    bool operator==(const VariantResult&) const = default;
};

struct GreedyRecord {
    std::string raw;
    std::optional<int> extracted;

    bool operator==(const GreedyRecord&) const = default;
};

struct ProbeResult {
    std::string sample_id;
    std::string fingerprint;
    std::vector<VariantResult> variants;
    std::optional<GreedyRecord> greedy;  // identity-order greedy response, when probed

    int total_responses() const;
    int correct_count() const;

    bool operator==(const ProbeResult&) const = default;
};

// Pulls the answer letter out of a raw completion. Priority: a leading
// standalone letter ("B", "B. ...", "B)"), then an "Answer: X" / "answer is X"
// cue. Cue words are case-insensitive, the letter is not. Out-of-range or
// missing letters yield nullopt.
std::optional<int> extract_answer(std::string_view raw, int option_count);

// Hash of probe settings + prompt style + backend identity; results cached
// under (sample_id, fingerprint) stay valid only for identical setups.
std::string config_fingerprint(const ProbeConfig& config, const ModelBackend& backend);

// Append-only JSONL cache of completed ProbeResult records. A corrupt final
// line (truncated write) is dropped with a warning; corruption elsewhere is an
// error. Thread-safe.
class ProbeCache {
  public:
    ProbeCache() = default;                    // in-memory only
    explicit ProbeCache(const std::string& path);  // loads existing records, appends new ones

    const ProbeResult* find(const std::string& sample_id, const std::string& fingerprint) const;
    void put(const ProbeResult& result);
    size_t size() const;

  private:
    std::string path_;
    std::map<std::pair<std::string, std::string>, ProbeResult> records_;
    std::ofstream out_;
    mutable std::mutex mu_;
};

// Probes every diversified query of one sample: n_responses sampled texts per
// query, each parsed and marked correct/incorrect. Served from cache when a
// record for (sample.id, fingerprint) exists; otherwise the completed result
// is cached. Partial results are never written.
ProbeResult probe_sample(const QASample& sample, std::span<const DiversifiedQuery> queries,
                         ModelBackend& backend, const ProbeConfig& config,
                         ProbeCache* cache = nullptr);

// Identity-order prompt, one completion at temperature 0.
std::optional<int> greedy_probe(const QASample& sample, ModelBackend& backend,
                                const ProbeConfig& config, std::span<const QASample> few_shot = {});

// Fraction of samples whose greedy probe hits the gold answer; unparseable
// counts wrong. Callers wanting the zero-shot number set config.few_shot_k = 0.
double evaluate_accuracy(const Dataset& dataset, ModelBackend& backend, const ProbeConfig& config);

struct ProbeRunOptions {
    int max_in_flight = 4;
    bool include_greedy = true;  // also record the identity-order greedy response
};

struct ProbeRunStats {
    size_t samples_total = 0;
    size_t samples_probed = 0;
    size_t cache_hits = 0;
    size_t backend_calls = 0;
    std::vector<std::string> failed_ids;
};

// Cache-aware bulk probe over a dataset, at most max_in_flight requests
// outstanding. Failed samples are collected, not fatal; nothing partial is
// cached for them.
ProbeRunStats probe_dataset(const Dataset& dataset, ModelBackend& backend,
                            const ProbeConfig& config, ProbeCache& cache,
                            const ProbeRunOptions& options = {}, std::ostream* progress = nullptr);

}  // namespace kaft
