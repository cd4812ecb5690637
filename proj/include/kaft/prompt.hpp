#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kaft/dataset.hpp"

namespace kaft {

inline char option_letter(int index) { return static_cast<char>('A' + index); }

// A question with its options already in presentation order.
struct PromptView {
    std::string question;
    std::vector<std::string> options;
};

using PromptRenderer =
    std::function<std::string(const PromptView& target, std::span<const QASample> few_shot)>;

// Style registry. "icl-mc-v1" is built in: an instruction line whose letter
// range follows the option count, a Question/Options/Answer block per few-shot
// example completed with its gold letter, then the target block ending at the
// bare "Answer:" cue. Few-shot examples keep their original option order.
void register_style(const std::string& id, PromptRenderer renderer);
bool style_registered(const std::string& id);
std::vector<std::string> registered_styles();

constexpr const char* kDefaultStyle = "icl-mc-v1";

std::string render_prompt(const PromptView& target, std::span<const QASample> few_shot,
                          const std::string& style_id = kDefaultStyle);

}  // namespace kaft
