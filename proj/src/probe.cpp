#include "kaft/probe.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <iostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "kaft/errors.hpp"
#include "kaft/prompt.hpp"
#include "kaft/rng.hpp"

namespace kaft {

using nlohmann::json;

int ProbeResult::total_responses() const {
    int n = 0;
    for (const auto& v : variants) n += static_cast<int>(v.responses.size());
    return n;
}

int ProbeResult::correct_count() const {
    int n = 0;
    for (const auto& v : variants) {
        for (const auto& r : v.responses) n += r.correct ? 1 : 0;
    }
    return n;
}

namespace {

bool is_letter_end(char c) {
    return c == '.' || c == ')' || c == ':' || std::isspace(static_cast<unsigned char>(c));
}

bool standalone_at(std::string_view raw, size_t pos, int option_count, int* index) {
    const char c = raw[pos];
    if (c < 'A' || c >= 'A' + option_count) return false;
    if (pos + 1 < raw.size() && !is_letter_end(raw[pos + 1])) return false;
    *index = c - 'A';
    return true;
}

}  // namespace

std::optional<int> extract_answer(std::string_view raw, int option_count) {
    // (1) leading standalone letter
    size_t i = 0;
    while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    int idx = 0;
    if (i < raw.size() && standalone_at(raw, i, option_count, &idx)) return idx;

    // (2) first "answer: X" / "answer is X" cue with a decisive letter
    std::string lower(raw.size(), '\0');
    std::transform(raw.begin(), raw.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const std::string_view cues[] = {"answer:", "answer is"};
    size_t pos = 0;
    while (pos < lower.size()) {
        size_t best = std::string::npos;
        size_t cue_len = 0;
        for (auto cue : cues) {
            size_t at = lower.find(cue, pos);
            if (at != std::string::npos && (best == std::string::npos || at < best)) {
                best = at;
                cue_len = cue.size();
            }
        }
        if (best == std::string::npos) break;
        size_t j = best + cue_len;
        while (j < raw.size() && std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
        if (j < raw.size() && standalone_at(raw, j, option_count, &idx)) return idx;
        pos = best + 1;
    }
    return std::nullopt;
}

std::string config_fingerprint(const ProbeConfig& config, const ModelBackend& backend) {
    std::ostringstream canon;
    canon << "orders=" << config.n_orders << ";responses=" << config.n_responses
          << ";temperature=" << config.temperature << ";few_shot_k=" << config.few_shot_k
          << ";seed=" << config.seed << ";max_tokens=" << config.max_tokens
          << ";style=" << config.style << ";backend=" << backend.identity();
    std::ostringstream hex;
    hex << std::hex << fnv1a64(canon.str());
    return hex.str();
}

namespace {

json response_to_json(const ResponseRecord& r) {
    json j;
    j["raw"] = r.raw;
    j["extracted"] = r.extracted ? json(*r.extracted) : json(nullptr);
    j["correct"] = r.correct;
    return j;
}

json probe_result_to_json(const ProbeResult& pr) {
    json j;
    j["sample_id"] = pr.sample_id;
    j["fingerprint"] = pr.fingerprint;
    json variants = json::array();
    for (const auto& v : pr.variants) {
        json vj;
        vj["variant_index"] = v.variant_index;
        vj["remapped_answer_index"] = v.remapped_answer_index;
        vj["option_count"] = v.option_count;
        json rs = json::array();
        for (const auto& r : v.responses) rs.push_back(response_to_json(r));
        vj["responses"] = std::move(rs);
        variants.push_back(std::move(vj));
    }
    j["variants"] = std::move(variants);
    if (pr.greedy) {
        json g;
        g["raw"] = pr.greedy->raw;
        g["extracted"] = pr.greedy->extracted ? json(*pr.greedy->extracted) : json(nullptr);
        j["greedy"] = std::move(g);
    }
    return j;
}

ProbeResult probe_result_from_json(const json& j) {
    ProbeResult pr;
    pr.sample_id = j.at("sample_id").get<std::string>();
    pr.fingerprint = j.at("fingerprint").get<std::string>();
    for (const auto& vj : j.at("variants")) {
        VariantResult v;
        v.variant_index = vj.at("variant_index").get<int>();
        v.remapped_answer_index = vj.at("remapped_answer_index").get<int>();
        v.option_count = vj.at("option_count").get<int>();
        for (const auto& rj : vj.at("responses")) {
            ResponseRecord r;
            r.raw = rj.at("raw").get<std::string>();
            if (!rj.at("extracted").is_null()) r.extracted = rj.at("extracted").get<int>();
            r.correct = rj.at("correct").get<bool>();
            v.responses.push_back(std::move(r));
        }
        pr.variants.push_back(std::move(v));
    }
    if (auto it = j.find("greedy"); it != j.end() && !it->is_null()) {
        GreedyRecord g;
        g.raw = it->at("raw").get<std::string>();
        if (!it->at("extracted").is_null()) g.extracted = it->at("extracted").get<int>();
        pr.greedy = std::move(g);
    }
    return pr;
}

}  // namespace

ProbeCache::ProbeCache(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (in) {
        std::vector<std::pair<size_t, std::string>> lines;
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty()) lines.emplace_back(line_no, line);
        }
        for (size_t i = 0; i < lines.size(); ++i) {
            try {
                ProbeResult pr = probe_result_from_json(json::parse(lines[i].second));
                records_[{pr.sample_id, pr.fingerprint}] = std::move(pr);
            } catch (const std::exception& e) {
                if (i + 1 == lines.size()) {
                    // Truncated trailing write from an interrupted run.
                    std::cerr << "warning: dropping corrupt trailing cache line " << lines[i].first
                              << " in " << path << "\n";
                } else {
                    throw UserError("corrupt probe cache " + path + " at line " +
                                    std::to_string(lines[i].first) + ": " + e.what());
                }
            }
        }
    }
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw UserError("cannot open probe cache for append: " + path);
}

const ProbeResult* ProbeCache::find(const std::string& sample_id,
                                    const std::string& fingerprint) const {
    std::lock_guard lock(mu_);
    auto it = records_.find({sample_id, fingerprint});
    return it == records_.end() ? nullptr : &it->second;
}

void ProbeCache::put(const ProbeResult& result) {
    std::lock_guard lock(mu_);
    if (out_.is_open()) {
        out_ << probe_result_to_json(result).dump() << "\n";
        out_.flush();
    }
    records_[{result.sample_id, result.fingerprint}] = result;
}

size_t ProbeCache::size() const {
    std::lock_guard lock(mu_);
    return records_.size();
}

namespace {

uint64_t variant_seed(const ProbeConfig& config, const std::string& sample_id, int variant_index) {
    return mix64(derive_seed(config.seed, "responses") ^ fnv1a64(sample_id) ^
                 static_cast<uint64_t>(variant_index + 1));
}

}  // namespace

ProbeResult probe_sample(const QASample& sample, std::span<const DiversifiedQuery> queries,
                         ModelBackend& backend, const ProbeConfig& config, ProbeCache* cache) {
    const std::string fp = config_fingerprint(config, backend);
    if (cache) {
        if (const ProbeResult* hit = cache->find(sample.id, fp)) return *hit;
    }

    ProbeResult pr;
    pr.sample_id = sample.id;
    pr.fingerprint = fp;
    for (const auto& q : queries) {
        if (q.sample_id != sample.id) {
            throw ProbeError("query does not belong to sample " + sample.id, sample.id,
                             q.variant_index);
        }
        GenRequest req;
        req.prompt = q.prompt;
        req.temperature = config.temperature;
        req.n = config.n_responses;
        req.max_tokens = config.max_tokens;
        req.seed = variant_seed(config, sample.id, q.variant_index);
        req.sample_id = sample.id;
        req.gold_slot = q.remapped_answer_index;
        req.option_count = static_cast<int>(sample.options.size());

        std::vector<std::string> raws;
        try {
            raws = backend.generate(req);
        } catch (const std::exception& e) {
            throw ProbeError("backend failed for sample " + sample.id + " variant " +
                                 std::to_string(q.variant_index) + ": " + e.what(),
                             sample.id, q.variant_index);
        }
        if (static_cast<int>(raws.size()) != config.n_responses) {
            throw ProbeError("backend returned " + std::to_string(raws.size()) + " responses, want " +
                                 std::to_string(config.n_responses),
                             sample.id, q.variant_index);
        }

        VariantResult v;
        v.variant_index = q.variant_index;
        v.remapped_answer_index = q.remapped_answer_index;
        v.option_count = req.option_count;
        for (auto& raw : raws) {
            ResponseRecord r;
            r.extracted = extract_answer(raw, req.option_count);
            r.correct = r.extracted.has_value() && *r.extracted == q.remapped_answer_index;
            r.raw = std::move(raw);
            v.responses.push_back(std::move(r));
        }
        pr.variants.push_back(std::move(v));
    }
    if (cache) cache->put(pr);
    return pr;
}

namespace {

GreedyRecord greedy_probe_record(const QASample& sample, ModelBackend& backend,
                                 const ProbeConfig& config, std::span<const QASample> few_shot) {
    PromptView view;
    view.question = sample.question;
    view.options = sample.options;

    GenRequest req;
    req.prompt = render_prompt(view, few_shot, config.style);
    req.temperature = 0.0;
    req.n = 1;
    req.max_tokens = config.max_tokens;
    req.seed = mix64(derive_seed(config.seed, "greedy") ^ fnv1a64(sample.id));
    req.sample_id = sample.id;
    req.gold_slot = sample.answer_index;
    req.option_count = static_cast<int>(sample.options.size());

    auto raws = backend.generate(req);
    if (raws.empty()) throw BackendError("backend returned no completion for greedy probe");
    GreedyRecord g;
    g.raw = std::move(raws.front());
    g.extracted = extract_answer(g.raw, req.option_count);
    return g;
}

}  // namespace

std::optional<int> greedy_probe(const QASample& sample, ModelBackend& backend,
                                const ProbeConfig& config, std::span<const QASample> few_shot) {
    return greedy_probe_record(sample, backend, config, few_shot).extracted;
}

double evaluate_accuracy(const Dataset& dataset, ModelBackend& backend, const ProbeConfig& config) {
    if (dataset.samples.empty()) throw UserError("empty dataset");
    const uint64_t pool_seed = derive_seed(config.seed, "few-shot");
    size_t hits = 0;
    for (const auto& sample : dataset.samples) {
        std::vector<QASample> shots;
        if (config.few_shot_k > 0) {
            shots = pick_few_shot(dataset, config.few_shot_k, pool_seed, sample.id);
        }
        auto got = greedy_probe(sample, backend, config, shots);
        if (got.has_value() && *got == sample.answer_index) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(dataset.samples.size());
}

namespace {

// Counts every generate() passing through, for run stats and idempotence checks.
class CountingBackend : public ModelBackend {
  public:
    CountingBackend(ModelBackend& inner, std::atomic<size_t>& counter)
        : inner_(inner), counter_(counter) {}

    std::vector<std::string> generate(const GenRequest& request) override {
        counter_.fetch_add(1);
        return inner_.generate(request);
    }
    std::string identity() const override { return inner_.identity(); }
    bool deterministic() const override { return inner_.deterministic(); }

  private:
    ModelBackend& inner_;
    std::atomic<size_t>& counter_;
};

}  // namespace

ProbeRunStats probe_dataset(const Dataset& dataset, ModelBackend& backend,
                            const ProbeConfig& config, ProbeCache& cache,
                            const ProbeRunOptions& options, std::ostream* progress) {
    if (options.max_in_flight < 1) throw UserError("max_in_flight must be >= 1");

    ProbeRunStats stats;
    stats.samples_total = dataset.samples.size();
    const std::string fp = config_fingerprint(config, backend);

    std::vector<size_t> pending;
    for (size_t i = 0; i < dataset.samples.size(); ++i) {
        if (cache.find(dataset.samples[i].id, fp)) {
            ++stats.cache_hits;
        } else {
            pending.push_back(i);
        }
    }

    std::atomic<size_t> calls{0};
    CountingBackend counted(backend, calls);
    const uint64_t pool_seed = derive_seed(config.seed, "few-shot");
    auto pool = few_shot_pool(dataset, pool_seed);

    std::atomic<size_t> cursor{0};
    std::atomic<size_t> done{0};
    std::mutex failures_mu;
    std::vector<std::string> failed;

    auto worker = [&]() {
        for (;;) {
            const size_t slot = cursor.fetch_add(1);
            if (slot >= pending.size()) return;
            const QASample& sample = dataset.samples[pending[slot]];
            try {
                std::vector<QASample> shots;
                if (config.few_shot_k > 0) {
                    shots = select_few_shot(dataset, pool, config.few_shot_k, sample.id);
                }
                auto queries = diversify_sample(sample, config, shots);
                ProbeResult pr = probe_sample(sample, queries, counted, config, nullptr);
                if (options.include_greedy) {
                    pr.greedy = greedy_probe_record(sample, counted, config, shots);
                }
                cache.put(pr);
            } catch (const std::exception& e) {
                std::lock_guard lock(failures_mu);
                failed.push_back(sample.id);
                if (progress) *progress << "probe failed: " << e.what() << "\n";
            }
            const size_t finished = done.fetch_add(1) + 1;
            if (progress && (finished % 100 == 0 || finished == pending.size())) {
                *progress << "probed " << finished << "/" << pending.size() << " samples ("
                          << stats.cache_hits << " cache hits)\n";
            }
        }
    };

    const size_t n_threads = std::min<size_t>(options.max_in_flight, std::max<size_t>(pending.size(), 1));
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    std::sort(failed.begin(), failed.end());
    stats.failed_ids = std::move(failed);
    stats.backend_calls = calls.load();
    stats.samples_probed = pending.size() - stats.failed_ids.size();
    return stats;
}

}  // namespace kaft
