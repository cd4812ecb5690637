#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace kaft {

// One generation request. The oracle fields (sample_id, gold_slot,
// option_count) let simulator backends answer without parsing the prompt;
// live endpoints ignore them.
struct GenRequest {
    std::string prompt;
    double temperature = 0.0;
    int n = 1;
    int max_tokens = 16;
    uint64_t seed = 0;

    std::string sample_id;
    int gold_slot = -1;
    int option_count = 0;
};

class ModelBackend {
  public:
    virtual ~ModelBackend() = default;

    // Returns exactly request.n completion texts. Must be safe to call from
    // multiple threads for deterministic backends.
    virtual std::vector<std::string> generate(const GenRequest& request) = 0;

    // Stable identifier folded into probe cache fingerprints.
    virtual std::string identity() const = 0;

    // Deterministic backends repeat outputs for fixed (prompt, seed, n).
    virtual bool deterministic() const = 0;
};

// Scripted backend for tests. Counts generate() calls.
class MockBackend : public ModelBackend {
  public:
    using Script = std::function<std::string(const GenRequest&, int response_index)>;

    explicit MockBackend(std::string fixed_text);
    explicit MockBackend(Script script, std::string tag = "scripted");

    std::vector<std::string> generate(const GenRequest& request) override;
    std::string identity() const override { return "mock:" + tag_; }
    bool deterministic() const override { return true; }

    int calls() const { return calls_.load(); }

  private:
    Script script_;
    std::string tag_;
    std::atomic<int> calls_{0};
};

// Synthetic model of known per-sample knowledge. For each response: with
// probability positional_bias answer the letter at biased_slot; otherwise with
// probability p answer the gold slot; otherwise guess uniformly among the
// non-gold slots. Greedy requests (temperature 0) return the argmax of that
// distribution, lowest slot on ties.
struct SimulatorSpec {
    double default_p = 0.5;
    std::unordered_map<std::string, double> p_by_id;
    bool random_p = false;  // no explicit entry -> p drawn from (noise_seed, id)
    double positional_bias = 0.0;
    int biased_slot = 0;
    uint64_t noise_seed = 0;

    double knowledge(const std::string& sample_id) const;
};

class SimulatorBackend : public ModelBackend {
  public:
    explicit SimulatorBackend(SimulatorSpec spec) : spec_(std::move(spec)) {}

    std::vector<std::string> generate(const GenRequest& request) override;
    std::string identity() const override;
    bool deterministic() const override { return true; }

    const SimulatorSpec& spec() const { return spec_; }

  private:
    SimulatorSpec spec_;
};

// Connection settings for an OpenAI-compatible completions endpoint.
struct EndpointConfig {
    std::string base_url;
    std::string model_name;
    std::string api_key_env = "KAFT_API_KEY";
    int timeout_ms = 30000;
    int max_retries = 3;
    int max_in_flight = 4;
    std::string cache_path;
};

// POSTs {base_url}/v1/chat/completions; declared in http_backend.cpp.
std::unique_ptr<ModelBackend> make_http_backend(const EndpointConfig& config);

}  // namespace kaft
