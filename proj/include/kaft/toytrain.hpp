#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace kaft {

// Multinomial softmax classifier, small enough that every training claim is
// directly checkable.
struct ToyModel {
    int feature_dim = 0;
    int class_count = 0;
    std::vector<double> weights;  // row-major [feature][class]
    std::vector<double> bias;     // [class]

    static ToyModel init(int feature_dim, int class_count, uint64_t seed, double scale = 0.01);

    std::vector<double> logits(std::span<const double> features) const;
    std::vector<double> probabilities(std::span<const double> features, double temperature = 1.0) const;
    int predict(std::span<const double> features) const;  // argmax, lowest index on ties

    bool operator==(const ToyModel&) const = default;
};

struct ToyExample {
    std::vector<double> features;
    int label = 0;
    double reward = 1.0;
};

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 1;
    int batch_size = 32;
    uint64_t seed = 0;
    double l2 = 0.0;
    bool shuffle = true;  // seeded reshuffle each epoch
};

struct ToyGradient {
    std::vector<double> weights;
    std::vector<double> bias;
};

// Mean over the batch of reward * cross-entropy, plus 0.5 * l2 * |W|^2.
// The plain mean keeps rewards absolute: a reward of 0.1 scales that
// example's gradient contribution to a tenth.
double weighted_loss(const ToyModel& model, std::span<const ToyExample> batch, double l2 = 0.0);

// Analytic gradient of weighted_loss.
ToyGradient grad(const ToyModel& model, std::span<const ToyExample> batch, double l2 = 0.0);

// Both in one forward pass.
double loss_and_grad(const ToyModel& model, std::span<const ToyExample> batch, double l2,
                     ToyGradient* out_grad);

// Mini-batch gradient descent, deterministic for fixed inputs. Throws on
// non-finite loss, naming epoch and batch.
ToyModel train(ToyModel model, std::span<const ToyExample> data, const TrainConfig& config);

double accuracy(const ToyModel& model, std::span<const ToyExample> data);

// JSON {"feature_dim","class_count","weights","bias"}.
void write_toy_model(const ToyModel& model, const std::string& path);
ToyModel load_toy_model(const std::string& path);

// JSONL {"features": [...], "label": int, "reward": float?}.
std::vector<ToyExample> load_toy_examples(const std::string& path);
void write_toy_examples(std::span<const ToyExample> examples, const std::string& path);

}  // namespace kaft
