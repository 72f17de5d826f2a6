#include "scaffoldsim/prompts.hpp"

#include <utility>

#include "scaffoldsim/core.hpp"
#include "scaffoldsim/error.hpp"

namespace scaffoldsim {

namespace {

const std::pair<const char*, const char*> kBuiltinPrompts[] = {
#include "builtin_prompts.inc"
};

}  // namespace

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        const auto open = tmpl.find("{{", i);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(i));
            break;
        }
        const auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) {
            out.append(tmpl.substr(i));
            break;
        }
        out.append(tmpl.substr(i, open - i));
        const std::string key(tmpl.substr(open + 2, close - open - 2));
        if (auto it = vars.find(key); it != vars.end())
            out += it->second;
        else
            out.append(tmpl.substr(open, close + 2 - open));
        i = close + 2;
    }
    return out;
}

const PromptLibrary& PromptLibrary::builtin() {
    static const PromptLibrary lib = [] {
        PromptLibrary l;
        for (const auto& [name, body] : kBuiltinPrompts) l.templates_.emplace(name, body);
        return l;
    }();
    return lib;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
    PromptLibrary lib = builtin();
    if (!std::filesystem::is_directory(dir))
        fail(ErrorKind::io, "template directory not found: " + dir.string());
    for (auto& [name, body] : lib.templates_) {
        const auto path = dir / (name + ".txt");
        if (std::filesystem::exists(path)) body = read_text_file(path);
    }
    return lib;
}

const std::string& PromptLibrary::get(std::string_view name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) fail(ErrorKind::invalid_argument, "unknown prompt template '" + std::string(name) + "'");
    return it->second;
}

std::string PromptLibrary::render(std::string_view name, const std::map<std::string, std::string>& vars) const {
    return render_template(get(name), vars);
}

std::vector<std::string> PromptLibrary::names() const {
    std::vector<std::string> out;
    for (const auto& [name, body] : templates_) out.push_back(name);
    return out;
}

void PromptLibrary::write_to(const std::filesystem::path& dir) const {
    for (const auto& [name, body] : templates_) write_text_file(dir / (name + ".txt"), body);
}

}  // namespace scaffoldsim
