#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace scaffoldsim {

/// Named prompt templates with {{placeholder}} substitution. The built-in set is compiled in
/// from templates/*.txt; a directory override replaces individual files by name.
class PromptLibrary {
public:
    static const PromptLibrary& builtin();

    /// Built-ins overlaid with every `<name>.txt` found in `dir`.
    static PromptLibrary load(const std::filesystem::path& dir);

    /// Throws Error(invalid_argument) for an unknown template name.
    const std::string& get(std::string_view name) const;

    std::string render(std::string_view name, const std::map<std::string, std::string>& vars) const;

    std::vector<std::string> names() const;

    void write_to(const std::filesystem::path& dir) const;

private:
    std::map<std::string, std::string, std::less<>> templates_;
};

/// Replaces every {{key}} in `tmpl`; unknown placeholders are left untouched.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

}  // namespace scaffoldsim
