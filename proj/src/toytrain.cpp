#include "kaft/toytrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "kaft/errors.hpp"
#include "kaft/rng.hpp"

namespace kaft {

using nlohmann::json;

ToyModel ToyModel::init(int feature_dim, int class_count, uint64_t seed, double scale) {
    if (feature_dim < 1 || class_count < 2) {
        throw UserError("toy model needs feature_dim >= 1 and class_count >= 2");
    }
    ToyModel m;
    m.feature_dim = feature_dim;
    m.class_count = class_count;
    m.weights.resize(static_cast<size_t>(feature_dim) * class_count);
    m.bias.assign(class_count, 0.0);
    Rng rng(derive_seed(seed, "toy-init"));
    for (auto& w : m.weights) w = rng.normal() * scale;
    return m;
}

std::vector<double> ToyModel::logits(std::span<const double> features) const {
    std::vector<double> z(bias);
    for (int f = 0; f < feature_dim; ++f) {
        const double x = features[f];
        const double* row = &weights[static_cast<size_t>(f) * class_count];
        for (int c = 0; c < class_count; ++c) z[c] += x * row[c];
    }
    return z;
}

std::vector<double> ToyModel::probabilities(std::span<const double> features,
                                            double temperature) const {
    std::vector<double> z = logits(features);
    if (temperature > 0.0 && temperature != 1.0) {
        for (auto& v : z) v /= temperature;
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (auto& v : z) v /= sum;
    return z;
}

int ToyModel::predict(std::span<const double> features) const {
    const auto z = logits(features);
    return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

double loss_and_grad(const ToyModel& model, std::span<const ToyExample> batch, double l2,
                     ToyGradient* out_grad) {
    if (batch.empty()) throw UserError("empty batch");
    const int C = model.class_count;
    const int F = model.feature_dim;

    if (out_grad) {
        out_grad->weights.assign(model.weights.size(), 0.0);
        out_grad->bias.assign(model.bias.size(), 0.0);
    }

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    std::vector<double> z;
    for (const auto& ex : batch) {
        if (static_cast<int>(ex.features.size()) != F) {
            throw UserError("feature vector has " + std::to_string(ex.features.size()) +
                            " entries, model expects " + std::to_string(F));
        }
        for (double x : ex.features) {
            if (!std::isfinite(x)) throw UserError("non-finite feature value");
        }
        if (ex.label < 0 || ex.label >= C) {
            throw UserError("label " + std::to_string(ex.label) + " outside class range");
        }

        z = model.logits(ex.features);
        const double zmax = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - zmax);
        const double log_sum = std::log(sum) + zmax;
        loss += ex.reward * (log_sum - z[ex.label]) * inv_b;

        if (out_grad) {
            for (int c = 0; c < C; ++c) {
                // d/dz_c of reward * (-log p[label]) / B
                double g = std::exp(z[c] - log_sum);
                if (c == ex.label) g -= 1.0;
                g *= ex.reward * inv_b;
                out_grad->bias[c] += g;
                for (int f = 0; f < F; ++f) {
                    out_grad->weights[static_cast<size_t>(f) * C + c] += ex.features[f] * g;
                }
            }
        }
    }

    if (l2 > 0.0) {
        double ss = 0.0;
        for (double w : model.weights) ss += w * w;
        loss += 0.5 * l2 * ss;
        if (out_grad) {
            for (size_t i = 0; i < model.weights.size(); ++i) {
                out_grad->weights[i] += l2 * model.weights[i];
            }
        }
    }
    return loss;
}

double weighted_loss(const ToyModel& model, std::span<const ToyExample> batch, double l2) {
    return loss_and_grad(model, batch, l2, nullptr);
}

ToyGradient grad(const ToyModel& model, std::span<const ToyExample> batch, double l2) {
    ToyGradient g;
    loss_and_grad(model, batch, l2, &g);
    return g;
}

ToyModel train(ToyModel model, std::span<const ToyExample> data, const TrainConfig& config) {
    if (data.empty()) throw UserError("empty training set");
    if (config.learning_rate <= 0.0) throw UserError("learning_rate must be > 0");
    if (config.epochs < 1 || config.batch_size < 1) {
        throw UserError("epochs and batch_size must be >= 1");
    }

    const size_t n = data.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<ToyExample> batch;
    ToyGradient g;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle) {
            Rng rng(mix64(derive_seed(config.seed, "epoch-shuffle") ^ static_cast<uint64_t>(epoch)));
            rng.shuffle(order);
        }
        for (size_t start = 0, batch_no = 0; start < n; start += config.batch_size, ++batch_no) {
            const size_t end = std::min(n, start + config.batch_size);
            batch.assign(end - start, {});
            for (size_t i = start; i < end; ++i) batch[i - start] = data[order[i]];

            const double loss = loss_and_grad(model, batch, config.l2, &g);
            if (!std::isfinite(loss)) {
                throw UserError("training diverged (non-finite loss) at epoch " +
                                std::to_string(epoch) + ", batch " + std::to_string(batch_no));
            }
            for (size_t i = 0; i < model.weights.size(); ++i) {
                model.weights[i] -= config.learning_rate * g.weights[i];
            }
            for (size_t i = 0; i < model.bias.size(); ++i) {
                model.bias[i] -= config.learning_rate * g.bias[i];
            }
        }
    }
    return model;
}

double accuracy(const ToyModel& model, std::span<const ToyExample> data) {
    if (data.empty()) throw UserError("empty evaluation set");
    size_t hits = 0;
    for (const auto& ex : data) {
        if (model.predict(ex.features) == ex.label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

void write_toy_model(const ToyModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UserError("cannot open for writing: " + path);
    json j;
    j["feature_dim"] = model.feature_dim;
    j["class_count"] = model.class_count;
    j["weights"] = model.weights;
    j["bias"] = model.bias;
    out << j.dump(2) << "\n";
    if (!out) throw UserError("write failed: " + path);
}

ToyModel load_toy_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UserError("cannot open model file: " + path);
    json j;
    try {
        in >> j;
        ToyModel m;
        m.feature_dim = j.at("feature_dim").get<int>();
        m.class_count = j.at("class_count").get<int>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<std::vector<double>>();
        if (m.weights.size() != static_cast<size_t>(m.feature_dim) * m.class_count ||
            m.bias.size() != static_cast<size_t>(m.class_count)) {
            throw UserError("parameter shapes do not match feature_dim/class_count");
        }
        return m;
    } catch (const json::exception& e) {
        throw UserError(path + ": " + e.what());
    }
}

std::vector<ToyExample> load_toy_examples(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UserError("cannot open toy data file: " + path);
    std::vector<ToyExample> examples;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            ToyExample ex;
            ex.features = j.at("features").get<std::vector<double>>();
            ex.label = j.at("label").get<int>();
            if (auto it = j.find("reward"); it != j.end()) ex.reward = it->get<double>();
            examples.push_back(std::move(ex));
        } catch (const std::exception& e) {
            throw UserError(path + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return examples;
}

void write_toy_examples(std::span<const ToyExample> examples, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UserError("cannot open for writing: " + path);
    for (const auto& ex : examples) {
        json j;
        j["features"] = ex.features;
        j["label"] = ex.label;
        j["reward"] = ex.reward;
        out << j.dump() << "\n";
    }
    if (!out) throw UserError("write failed: " + path);
}

}  // namespace kaft
