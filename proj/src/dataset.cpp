#include "kaft/dataset.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kaft/errors.hpp"

namespace kaft {

using nlohmann::json;

void validate_sample(const QASample& sample) {
    if (sample.id.empty()) throw UserError("field 'id' must be a non-empty string");
    if (sample.options.size() < 2 || sample.options.size() > static_cast<size_t>(kMaxOptions)) {
        throw UserError("field 'options' must hold 2.." + std::to_string(kMaxOptions) +
                        " entries, got " + std::to_string(sample.options.size()));
    }
    if (sample.answer_index < 0 || static_cast<size_t>(sample.answer_index) >= sample.options.size()) {
        throw UserError("answer_index out of range: " + std::to_string(sample.answer_index) + " with " +
                        std::to_string(sample.options.size()) + " options");
    }
    std::set<std::string> seen;
    for (const auto& opt : sample.options) {
        if (!seen.insert(opt).second) {
            throw UserError("field 'options' contains duplicate text: \"" + opt + "\"");
        }
    }
}

json sample_to_json(const QASample& sample) {
    json j;
    j["id"] = sample.id;
    j["question"] = sample.question;
    j["options"] = sample.options;
    j["answer_index"] = sample.answer_index;
    if (!sample.meta.empty()) j["meta"] = sample.meta;
    return j;
}

namespace {

const json& require_field(const json& j, const char* name, json::value_t type) {
    auto it = j.find(name);
    if (it == j.end()) throw UserError(std::string("missing field '") + name + "'");
    // Integers arrive as unsigned or signed depending on sign; accept both.
    const bool numeric_ok = type == json::value_t::number_integer &&
                            (it->is_number_integer() || it->is_number_unsigned());
    if (it->type() != type && !numeric_ok) {
        throw UserError(std::string("field '") + name + "' has wrong type");
    }
    return *it;
}

}  // namespace

QASample sample_from_json(const json& j) {
    if (!j.is_object()) throw UserError("record is not a JSON object");
    QASample s;
    s.id = require_field(j, "id", json::value_t::string).get<std::string>();
    s.question = require_field(j, "question", json::value_t::string).get<std::string>();
    const json& opts = require_field(j, "options", json::value_t::array);
    for (const auto& o : opts) {
        if (!o.is_string()) throw UserError("field 'options' must contain only strings");
        s.options.push_back(o.get<std::string>());
    }
    s.answer_index = require_field(j, "answer_index", json::value_t::number_integer).get<int>();
    if (auto it = j.find("meta"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw UserError("field 'meta' must be an object");
        for (auto& [k, v] : it->items()) {
            if (!v.is_string()) throw UserError("field 'meta' values must be strings");
            s.meta[k] = v.get<std::string>();
        }
    }
    validate_sample(s);
    return s;
}

Dataset load_dataset(const std::string& path, const LoadOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UserError("cannot open dataset file: " + path);

    Dataset ds;
    ds.source_path = path;
    std::set<std::string> ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            QASample s = sample_from_json(json::parse(line));
            if (!ids.insert(s.id).second) {
                throw UserError("duplicate id \"" + s.id + "\"");
            }
            ds.samples.push_back(std::move(s));
        } catch (const json::parse_error& e) {
            const std::string msg = "invalid JSON: " + std::string(e.what());
            if (!opts.skip_invalid) throw UserError(path + ": line " + std::to_string(line_no) + ": " + msg);
            std::cerr << "warning: skipping line " << line_no << ": " << msg << "\n";
        } catch (const UserError& e) {
            if (!opts.skip_invalid) {
                throw UserError(path + ": line " + std::to_string(line_no) + ": " + e.what());
            }
            std::cerr << "warning: skipping line " << line_no << ": " << e.what() << "\n";
        }
    }
    return ds;
}

void write_dataset(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UserError("cannot open for writing: " + path);
    for (const auto& s : dataset.samples) {
        out << sample_to_json(s).dump() << "\n";
    }
    if (!out) throw UserError("write failed: " + path);
}

}  // namespace kaft
