#include "kaft/prompt.hpp"

#include <map>
#include <mutex>
#include <sstream>

#include "kaft/errors.hpp"

namespace kaft {

namespace {

void append_block(std::ostringstream& out, const std::string& question,
                  const std::vector<std::string>& options, int answered_index) {
    out << "For the following question, select one correct answer from A to "
        << option_letter(static_cast<int>(options.size()) - 1) << ".\n";
    out << "Question: " << question << "\n";
    out << "Options:\n";
    for (size_t i = 0; i < options.size(); ++i) {
        out << option_letter(static_cast<int>(i)) << ". " << options[i] << "\n";
    }
    out << "Answer:";
    if (answered_index >= 0) {
        out << " " << option_letter(answered_index) << "\n\n";
    }
}

std::string render_icl_mc_v1(const PromptView& target, std::span<const QASample> few_shot) {
    std::ostringstream out;
    for (const auto& shot : few_shot) {
        append_block(out, shot.question, shot.options, shot.answer_index);
    }
    append_block(out, target.question, target.options, -1);
    return out.str();
}

std::map<std::string, PromptRenderer>& registry() {
    static std::map<std::string, PromptRenderer> styles = {
        {kDefaultStyle, render_icl_mc_v1},
    };
    return styles;
}

std::mutex registry_mu;

}  // namespace

void register_style(const std::string& id, PromptRenderer renderer) {
    std::lock_guard lock(registry_mu);
    registry()[id] = std::move(renderer);
}

bool style_registered(const std::string& id) {
    std::lock_guard lock(registry_mu);
    return registry().count(id) > 0;
}

std::vector<std::string> registered_styles() {
    std::lock_guard lock(registry_mu);
    std::vector<std::string> ids;
    for (const auto& [id, _] : registry()) ids.push_back(id);
    return ids;
}

std::string render_prompt(const PromptView& target, std::span<const QASample> few_shot,
                          const std::string& style_id) {
    PromptRenderer renderer;
    {
        std::lock_guard lock(registry_mu);
        auto it = registry().find(style_id);
        if (it == registry().end()) throw UserError("unknown prompt style: " + style_id);
        renderer = it->second;
    }
    return renderer(target, few_shot);
}

}  // namespace kaft
