#include "kaft/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kaft/errors.hpp"

namespace kaft {

using nlohmann::json;

int PartitionedDataset::subset_of(const std::string& id) const {
    auto it = assignment.find(id);
    if (it == assignment.end()) throw UserError("sample not in partition: " + id);
    return it->second;
}

std::vector<size_t> PartitionedDataset::subset_sizes() const {
    std::vector<size_t> sizes(k, 0);
    for (const auto& [_, s] : assignment) ++sizes[s];
    return sizes;
}

std::vector<std::string> partition_labels(int k) {
    if (k == 4) return {"wrong", "might-wrong", "might-right", "right"};
    std::vector<std::string> labels;
    labels.reserve(k);
    for (int i = 0; i < k; ++i) labels.push_back("subset-" + std::to_string(i));
    return labels;
}

std::vector<ConflictScore> compute_scores(std::span<const ProbeResult> results) {
    std::vector<ConflictScore> scores;
    scores.reserve(results.size());
    for (const auto& pr : results) {
        if (pr.variants.empty()) {
            throw UserError("incomplete probe result for sample " + pr.sample_id + ": no variants");
        }
        const size_t per_variant = pr.variants.front().responses.size();
        for (const auto& v : pr.variants) {
            if (v.responses.empty() || v.responses.size() != per_variant) {
                throw UserError("incomplete probe result for sample " + pr.sample_id + ": variant " +
                                std::to_string(v.variant_index) + " has " +
                                std::to_string(v.responses.size()) + " responses, want " +
                                std::to_string(per_variant));
            }
        }
        ConflictScore s;
        s.sample_id = pr.sample_id;
        s.n_correct = pr.correct_count();
        s.n_total = pr.total_responses();
        s.score = static_cast<double>(s.n_correct) / static_cast<double>(s.n_total);
        scores.push_back(std::move(s));
    }
    return scores;
}

PartitionedDataset partition(std::span<const ConflictScore> scores, int k) {
    if (k < 2) throw UserError("partition needs k >= 2, got " + std::to_string(k));
    const size_t n = scores.size();
    if (static_cast<size_t>(k) > n) {
        throw UserError("cannot split " + std::to_string(n) + " samples into " + std::to_string(k) +
                        " subsets");
    }

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a].score < scores[b].score; });

    PartitionedDataset part;
    part.k = k;
    part.labels = partition_labels(k);
    part.ids.reserve(n);
    for (const auto& s : scores) part.ids.push_back(s.sample_id);
    for (size_t rank = 0; rank < n; ++rank) {
        const int subset = static_cast<int>(rank * static_cast<size_t>(k) / n);
        auto [it, inserted] = part.assignment.emplace(scores[order[rank]].sample_id, subset);
        if (!inserted) throw UserError("duplicate sample id in scores: " + it->first);
    }
    return part;
}

namespace {

double quantile(std::vector<double> sorted, double q) {
    // Linear interpolation between order statistics.
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

double silverman_bandwidth(const std::vector<double>& values) {
    const size_t n = values.size();
    if (n < 2) return 0.0;
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    const double spread = std::min(sd, iqr / 1.34);
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

double gauss(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI); }

}  // namespace

ScoreReport score_report(std::span<const ConflictScore> scores, int bins) {
    if (scores.empty()) throw UserError("empty score list");
    if (bins < 1) throw UserError("bins must be >= 1");

    ScoreReport rep;
    rep.histogram.resize(bins);
    const double width = 1.0 / bins;
    for (int b = 0; b < bins; ++b) {
        rep.histogram[b].lo = b * width;
        rep.histogram[b].hi = (b + 1) * width;
    }
    std::vector<double> values;
    values.reserve(scores.size());
    for (const auto& s : scores) {
        values.push_back(s.score);
        int b = std::min(static_cast<int>(s.score * bins), bins - 1);  // 1.0 lands in the last bin
        b = std::max(b, 0);
        ++rep.histogram[b].count;
    }

    constexpr int kKdePoints = 101;
    constexpr double kStep = 1.0 / (kKdePoints - 1);
    double h = silverman_bandwidth(values);
    h = std::max(h, kStep);  // keep the sampled density resolvable on the grid
    rep.bandwidth = h;

    const double n = static_cast<double>(values.size());
    for (int i = 0; i < kKdePoints; ++i) {
        const double x = i * kStep;
        double density = 0.0;
        for (double v : values) {
            // Reflect at 0 and 1 so no mass leaks outside the score range.
            density += gauss((x - v) / h) + gauss((x + v) / h) + gauss((x - (2.0 - v)) / h);
        }
        rep.kde.emplace_back(x, density / (n * h));
    }
    return rep;
}

void write_scores(std::span<const ConflictScore> scores, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UserError("cannot open for writing: " + path);
    for (const auto& s : scores) {
        json j;
        j["id"] = s.sample_id;
        j["n_correct"] = s.n_correct;
        j["n_total"] = s.n_total;
        j["score"] = s.score;
        out << j.dump() << "\n";
    }
    if (!out) throw UserError("write failed: " + path);
}

std::vector<ConflictScore> load_scores(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UserError("cannot open scores file: " + path);
    std::vector<ConflictScore> scores;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            ConflictScore s;
            s.sample_id = j.at("id").get<std::string>();
            s.n_correct = j.at("n_correct").get<int>();
            s.n_total = j.at("n_total").get<int>();
            s.score = j.at("score").get<double>();
            scores.push_back(std::move(s));
        } catch (const std::exception& e) {
            throw UserError(path + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return scores;
}

void write_partition(const PartitionedDataset& partition, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UserError("cannot open for writing: " + path);
    for (const auto& id : partition.ids) {
        const int subset = partition.subset_of(id);
        json j;
        j["id"] = id;
        j["subset"] = subset;
        j["label"] = partition.labels[subset];
        out << j.dump() << "\n";
    }
    if (!out) throw UserError("write failed: " + path);
}

PartitionedDataset load_partition(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UserError("cannot open partition file: " + path);
    PartitionedDataset part;
    part.k = 0;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            const auto id = j.at("id").get<std::string>();
            const int subset = j.at("subset").get<int>();
            part.ids.push_back(id);
            part.assignment[id] = subset;
            part.k = std::max(part.k, subset + 1);
        } catch (const std::exception& e) {
            throw UserError(path + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    part.labels = partition_labels(part.k);
    return part;
}

void write_report(const ScoreReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UserError("cannot open for writing: " + path);
    out << "# histogram\n";
    out << "bin_lo,bin_hi,count\n";
    char buf[128];
    for (const auto& b : report.histogram) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%d\n", b.lo, b.hi, b.count);
        out << buf;
    }
    out << "\n# kde\n";
    out << "x,density\n";
    for (const auto& [x, d] : report.kde) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.9g\n", x, d);
        out << buf;
    }
    if (!out) throw UserError("write failed: " + path);
}

}  // namespace kaft
