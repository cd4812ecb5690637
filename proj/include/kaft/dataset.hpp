#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace kaft {

// Letters A..Z bound the option count.
constexpr int kMaxOptions = 26;

// One multiple-choice question. Answers are stored as 0-based indices into
// `options`; letters are a presentation concern of the prompt builder.
struct QASample {
    std::string id;
    std::string question;
    std::vector<std::string> options;
    int answer_index = 0;
    std::map<std::string, std::string> meta;

    bool operator==(const QASample&) const = default;
};

struct Dataset {
    std::vector<QASample> samples;
    std::string source_path;

    size_t size() const { return samples.size(); }
};

struct LoadOptions {
    // When true, invalid lines are logged to stderr and dropped instead of
    // aborting the whole load.
    bool skip_invalid = false;
};

// Throws UserError naming the offending field.
void validate_sample(const QASample& sample);

nlohmann::json sample_to_json(const QASample& sample);
QASample sample_from_json(const nlohmann::json& j);

// JSONL, one sample per line:
//   {"id": str, "question": str, "options": [str, ...], "answer_index": int, "meta": {str: str}?}
// Line order is preserved; ids must be unique. Errors name the line number.
Dataset load_dataset(const std::string& path, const LoadOptions& opts = {});
void write_dataset(const Dataset& dataset, const std::string& path);

}  // namespace kaft
