#include "kaft/diversify.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "kaft/errors.hpp"
#include "kaft/prompt.hpp"
#include "kaft/rng.hpp"

namespace kaft {

bool Permutation::is_identity() const {
    for (size_t i = 0; i < mapping.size(); ++i) {
        if (mapping[i] != static_cast<int>(i)) return false;
    }
    return true;
}

namespace {

// Factorial capped at a value safely above any sane n_orders.
uint64_t capped_factorial(int n) {
    uint64_t f = 1;
    for (int i = 2; i <= n; ++i) {
        if (f > (1ull << 40)) return 1ull << 40;
        f *= static_cast<uint64_t>(i);
    }
    return f;
}

}  // namespace

std::vector<Permutation> make_permutations(int option_count, int n_orders, uint64_t seed) {
    if (option_count < 2) {
        throw UserError("cannot permute " + std::to_string(option_count) + " options");
    }
    if (n_orders < 1) throw UserError("n_orders must be >= 1");

    Permutation identity;
    identity.mapping.resize(option_count);
    std::iota(identity.mapping.begin(), identity.mapping.end(), 0);

    const uint64_t total = capped_factorial(option_count);
    const size_t wanted = static_cast<size_t>(std::min<uint64_t>(n_orders, total));

    std::vector<Permutation> out;
    out.reserve(wanted);
    out.push_back(identity);
    if (wanted == 1) return out;

    Rng rng(seed);
    if (option_count <= 8) {
        // Small alphabets: enumerate, shuffle the non-identity ones, take a prefix.
        std::vector<Permutation> rest;
        Permutation p = identity;
        while (std::next_permutation(p.mapping.begin(), p.mapping.end())) {
            rest.push_back(p);
        }
        rng.shuffle(rest);
        for (size_t i = 0; i + 1 < wanted; ++i) out.push_back(rest[i]);
    } else {
        // Factorial dwarfs n_orders: rejection-sample distinct shuffles.
        std::set<std::vector<int>> seen{identity.mapping};
        while (out.size() < wanted) {
            Permutation p = identity;
            rng.shuffle(p.mapping);
            if (seen.insert(p.mapping).second) out.push_back(std::move(p));
        }
    }
    return out;
}

std::vector<DiversifiedQuery> diversify_sample(const QASample& sample, const ProbeConfig& config,
                                               std::span<const QASample> few_shot) {
    for (const auto& shot : few_shot) {
        if (shot.id == sample.id) {
            throw UserError("few-shot pool contains the probed sample itself: " + sample.id);
        }
    }

    const uint64_t perm_seed = mix64(derive_seed(config.seed, "permutations") ^ fnv1a64(sample.id));
    auto perms = make_permutations(static_cast<int>(sample.options.size()), config.n_orders, perm_seed);

    std::vector<DiversifiedQuery> queries;
    queries.reserve(perms.size());
    for (size_t j = 0; j < perms.size(); ++j) {
        DiversifiedQuery q;
        q.sample_id = sample.id;
        q.variant_index = static_cast<int>(j);
        q.permutation = perms[j];

        PromptView view;
        view.question = sample.question;
        view.options.reserve(sample.options.size());
        for (size_t slot = 0; slot < sample.options.size(); ++slot) {
            const int src = perms[j].mapping[slot];
            view.options.push_back(sample.options[src]);
            if (src == sample.answer_index) q.remapped_answer_index = static_cast<int>(slot);
        }
        q.prompt = render_prompt(view, few_shot, config.style);
        queries.push_back(std::move(q));
    }
    return queries;
}

std::vector<size_t> few_shot_pool(const Dataset& dataset, uint64_t seed) {
    std::vector<size_t> pool(dataset.samples.size());
    std::iota(pool.begin(), pool.end(), 0);
    Rng rng(seed);
    rng.shuffle(pool);
    return pool;
}

std::vector<QASample> select_few_shot(const Dataset& dataset, std::span<const size_t> pool, int k,
                                      const std::string& exclude_id) {
    if (k < 0) throw UserError("few_shot_k must be >= 0");
    if (k == 0) return {};

    std::vector<QASample> shots;
    for (size_t idx : pool) {
        if (dataset.samples[idx].id == exclude_id) continue;
        shots.push_back(dataset.samples[idx]);
        if (shots.size() == static_cast<size_t>(k)) return shots;
    }
    throw UserError("not enough samples for " + std::to_string(k) + "-shot examples (have " +
                    std::to_string(shots.size()) + " excluding \"" + exclude_id + "\")");
}

std::vector<QASample> pick_few_shot(const Dataset& dataset, int k, uint64_t seed,
                                    const std::string& exclude_id) {
    return select_few_shot(dataset, few_shot_pool(dataset, seed), k, exclude_id);
}

}  // namespace kaft
