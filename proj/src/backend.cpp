#include "kaft/backend.hpp"

#include <sstream>

#include "kaft/errors.hpp"
#include "kaft/prompt.hpp"
#include "kaft/rng.hpp"

namespace kaft {

MockBackend::MockBackend(std::string fixed_text)
    : script_([text = std::move(fixed_text)](const GenRequest&, int) { return text; }),
      tag_("fixed") {}

MockBackend::MockBackend(Script script, std::string tag)
    : script_(std::move(script)), tag_(std::move(tag)) {}

std::vector<std::string> MockBackend::generate(const GenRequest& request) {
    calls_.fetch_add(1);
    std::vector<std::string> out;
    out.reserve(request.n);
    for (int i = 0; i < request.n; ++i) out.push_back(script_(request, i));
    return out;
}

double SimulatorSpec::knowledge(const std::string& sample_id) const {
    if (auto it = p_by_id.find(sample_id); it != p_by_id.end()) return it->second;
    if (random_p) {
        Rng rng(mix64(derive_seed(noise_seed, "knowledge") ^ fnv1a64(sample_id)));
        return rng.uniform01();
    }
    return default_p;
}

namespace {

std::vector<double> slot_distribution(const SimulatorSpec& spec, double p, int gold_slot,
                                      int option_count) {
    const double b = spec.positional_bias;
    std::vector<double> probs(option_count, 0.0);
    for (int s = 0; s < option_count; ++s) {
        probs[s] = (1.0 - b) * (s == gold_slot ? p : (1.0 - p) / (option_count - 1));
    }
    if (spec.biased_slot >= 0 && spec.biased_slot < option_count) {
        probs[spec.biased_slot] += b;
    }
    return probs;
}

}  // namespace

std::vector<std::string> SimulatorBackend::generate(const GenRequest& request) {
    if (request.gold_slot < 0 || request.option_count < 2) {
        throw BackendError("simulator backend requires gold_slot/option_count metadata on the request");
    }
    const double p = spec_.knowledge(request.sample_id);
    const auto probs = slot_distribution(spec_, p, request.gold_slot, request.option_count);

    std::vector<std::string> out;
    out.reserve(request.n);
    if (request.temperature <= 0.0) {
        int best = 0;
        for (int s = 1; s < request.option_count; ++s) {
            if (probs[s] > probs[best]) best = s;
        }
        for (int i = 0; i < request.n; ++i) out.emplace_back(1, option_letter(best));
        return out;
    }

    Rng rng(mix64(spec_.noise_seed ^ fnv1a64(request.prompt) ^ mix64(request.seed)));
    for (int i = 0; i < request.n; ++i) {
        double u = rng.uniform01();
        int pick = request.option_count - 1;
        for (int s = 0; s < request.option_count; ++s) {
            u -= probs[s];
            if (u < 0.0) {
                pick = s;
                break;
            }
        }
        out.emplace_back(1, option_letter(pick));
    }
    return out;
}

std::string SimulatorBackend::identity() const {
    std::ostringstream id;
    id << "sim:p=" << spec_.default_p << (spec_.random_p ? ":rand" : "") << ":b="
       << spec_.positional_bias << ":slot=" << spec_.biased_slot << ":seed=" << spec_.noise_seed
       << ":ids=" << spec_.p_by_id.size();
    return id.str();
}

}  // namespace kaft
