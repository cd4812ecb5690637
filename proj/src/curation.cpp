#include "kaft/curation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "kaft/errors.hpp"
#include "kaft/prompt.hpp"
#include "kaft/rng.hpp"

namespace kaft {

using nlohmann::json;

RewardPolicy RewardPolicy::parse(const std::string& name) {
    RewardPolicy p;
    if (name == "kaft") {
        p.kind = Kind::kaft;
    } else if (name == "constant") {
        p.kind = Kind::constant;
    } else if (name == "auto_adapt") {
        p.kind = Kind::auto_adapt;
    } else if (name == "k_subsets") {
        p.kind = Kind::k_subsets;
    } else {
        throw UserError("unknown reward policy: " + name +
                        " (expected kaft|constant|auto_adapt|k_subsets)");
    }
    return p;
}

CurationConfig::Baseline CurationConfig::parse_baseline(const std::string& name) {
    if (name == "vanilla") return Baseline::vanilla;
    if (name == "no_conflict") return Baseline::no_conflict;
    if (name == "self_aligning") return Baseline::self_aligning;
    if (name == "kaft") return Baseline::kaft;
    if (name == "wrong_mix") return Baseline::wrong_mix;
    throw UserError("unknown baseline: " + name +
                    " (expected vanilla|no_conflict|self_aligning|kaft|wrong_mix)");
}

namespace {

void check_reward(double r, const std::string& what) {
    if (!(r > 0.0) || r > 1.0) {
        throw UserError(what + " must lie in (0, 1], got " + std::to_string(r));
    }
}

std::unordered_map<std::string, double> score_index(std::span<const ConflictScore> scores) {
    std::unordered_map<std::string, double> by_id;
    for (const auto& s : scores) by_id[s.sample_id] = s.score;
    return by_id;
}

}  // namespace

std::vector<RewardedSample> assign_rewards(const Dataset& dataset,
                                           const PartitionedDataset& partition,
                                           std::span<const ConflictScore> scores,
                                           const RewardPolicy& policy) {
    switch (policy.kind) {
        case RewardPolicy::Kind::kaft:
            if (partition.k != 4) {
                throw UserError("kaft rewards need a k=4 partition, got k=" +
                                std::to_string(partition.k));
            }
            check_reward(policy.alpha, "alpha");
            check_reward(policy.beta, "beta");
            break;
        case RewardPolicy::Kind::constant:
            check_reward(policy.constant_value, "constant reward");
            break;
        case RewardPolicy::Kind::auto_adapt:
            check_reward(policy.floor, "auto_adapt floor");
            break;
        case RewardPolicy::Kind::k_subsets:
            if (static_cast<int>(policy.subset_rewards.size()) != partition.k) {
                throw UserError("k_subsets needs " + std::to_string(partition.k) +
                                " rewards, got " + std::to_string(policy.subset_rewards.size()));
            }
            for (double r : policy.subset_rewards) check_reward(r, "subset reward");
            break;
    }

    const auto scores_by_id =
        policy.kind == RewardPolicy::Kind::auto_adapt ? score_index(scores)
                                                      : std::unordered_map<std::string, double>{};

    std::vector<RewardedSample> out;
    out.reserve(dataset.samples.size());
    for (const auto& sample : dataset.samples) {
        RewardedSample rs;
        rs.sample = sample;
        rs.subset = partition.subset_of(sample.id);
        switch (policy.kind) {
            case RewardPolicy::Kind::kaft: {
                const double table[4] = {policy.alpha, policy.beta, 1.0, 1.0};
                rs.reward = table[rs.subset];
                break;
            }
            case RewardPolicy::Kind::constant:
                rs.reward = policy.constant_value;
                break;
            case RewardPolicy::Kind::auto_adapt: {
                auto it = scores_by_id.find(sample.id);
                if (it == scores_by_id.end()) {
                    throw UserError("auto_adapt: no conflict score for sample " + sample.id);
                }
                rs.reward = it->second > 0.0 ? it->second : policy.floor;
                break;
            }
            case RewardPolicy::Kind::k_subsets:
                rs.reward = policy.subset_rewards[rs.subset];
                break;
        }
        out.push_back(std::move(rs));
    }
    return out;
}

std::vector<RewardedSample> build_baseline(const Dataset& dataset,
                                           const PartitionedDataset& partition,
                                           std::span<const ConflictScore> scores,
                                           const ProbeCache& cache, const std::string& fingerprint,
                                           const CurationConfig& config) {
    using Baseline = CurationConfig::Baseline;

    if (config.baseline == Baseline::kaft) {
        return assign_rewards(dataset, partition, scores, config.policy);
    }

    auto with_unit_reward = [&](const QASample& sample) {
        RewardedSample rs;
        rs.sample = sample;
        rs.subset = partition.subset_of(sample.id);
        rs.reward = 1.0;
        return rs;
    };

    std::vector<RewardedSample> out;
    switch (config.baseline) {
        case Baseline::vanilla:
            for (const auto& s : dataset.samples) out.push_back(with_unit_reward(s));
            break;

        case Baseline::no_conflict:
            for (const auto& s : dataset.samples) {
                if (partition.subset_of(s.id) != 0) out.push_back(with_unit_reward(s));
            }
            break;

        case Baseline::self_aligning: {
            std::vector<std::string> missing;
            for (const auto& s : dataset.samples) {
                RewardedSample rs = with_unit_reward(s);
                if (rs.subset == 0) {
                    const ProbeResult* pr = cache.find(s.id, fingerprint);
                    if (pr == nullptr || !pr->greedy.has_value()) {
                        missing.push_back(s.id);
                    } else if (pr->greedy->extracted.has_value() &&
                               *pr->greedy->extracted < static_cast<int>(s.options.size())) {
                        rs.sample.answer_index = *pr->greedy->extracted;
                    }
                    // unparseable greedy response: keep the original answer
                }
                out.push_back(std::move(rs));
            }
            if (!missing.empty()) {
                std::string ids;
                for (size_t i = 0; i < missing.size(); ++i) ids += (i ? ", " : "") + missing[i];
                throw UserError("self_aligning: missing greedy probe for " +
                                std::to_string(missing.size()) + " conflicted sample(s): " + ids);
            }
            break;
        }

        case Baseline::wrong_mix: {
            if (partition.k != 4) {
                throw UserError("wrong_mix needs a k=4 partition, got k=" +
                                std::to_string(partition.k));
            }
            if (config.lambda < 0.0 || config.lambda > 1.0) {
                throw UserError("lambda must lie in [0, 1], got " + std::to_string(config.lambda));
            }
            std::vector<std::string> wrong_ids;
            for (const auto& s : dataset.samples) {
                if (partition.subset_of(s.id) == 0) wrong_ids.push_back(s.id);
            }
            const size_t keep =
                static_cast<size_t>(std::llround(config.lambda * static_cast<double>(wrong_ids.size())));
            Rng rng(derive_seed(config.seed, "wrong-mix"));
            rng.shuffle(wrong_ids);
            std::unordered_set<std::string> kept(wrong_ids.begin(), wrong_ids.begin() + keep);
            for (const auto& s : dataset.samples) {
                if (partition.subset_of(s.id) != 0 || kept.count(s.id)) {
                    out.push_back(with_unit_reward(s));
                }
            }
            break;
        }

        case Baseline::kaft:
            break;  // handled above
    }
    return out;
}

void export_weighted(std::span<const RewardedSample> samples, const std::string& path,
                     const std::string& format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UserError("cannot open for writing: " + path);

    if (format == kWeightedJsonlV1) {
        for (const auto& rs : samples) {
            json j = sample_to_json(rs.sample);
            j["subset"] = rs.subset;
            j["reward"] = rs.reward;
            out << j.dump() << "\n";
        }
    } else if (format == kPromptCompletionV1) {
        for (const auto& rs : samples) {
            PromptView view;
            view.question = rs.sample.question;
            view.options = rs.sample.options;
            json j;
            j["prompt"] = render_prompt(view, {});
            j["completion"] = std::string(" ") + option_letter(rs.sample.answer_index);
            j["reward"] = rs.reward;
            out << j.dump() << "\n";
        }
    } else {
        throw UserError("unknown export format: " + format);
    }
    if (!out) throw UserError("write failed: " + path);
}

std::vector<RewardedSample> load_weighted(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UserError("cannot open weighted training file: " + path);
    std::vector<RewardedSample> samples;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            RewardedSample rs;
            rs.subset = j.at("subset").get<int>();
            rs.reward = j.at("reward").get<double>();
            j.erase("subset");
            j.erase("reward");
            rs.sample = sample_from_json(j);
            samples.push_back(std::move(rs));
        } catch (const std::exception& e) {
            throw UserError(path + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return samples;
}

}  // namespace kaft
