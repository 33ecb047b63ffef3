#include "drp/prompts.hpp"

#include <fstream>
#include <sstream>

#include "drp/error.hpp"
#include "drp/hashing.hpp"
#include "drp/tokenize.hpp"

namespace drp {

namespace detail {
const std::map<std::string, std::string>& embedded_prompts();
}

PromptSet PromptSet::defaults() {
    PromptSet set;
    for (const auto& [name, text] : detail::embedded_prompts()) set.templates_[name] = trim(text);
    return set;
}

PromptSet PromptSet::load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "prompt dir '" + dir.string() + "' does not exist");
    PromptSet set = defaults();
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        const auto name = entry.path().stem().string();
        if (!set.templates_.count(name)) throw Error(ErrorKind::Config, "unknown prompt template '" + name + "'");
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        set.templates_[name] = trim(buf.str());
    }
    return set;
}

const std::string& PromptSet::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw Error(ErrorKind::Config, "unknown prompt template '" + name + "'");
    return it->second;
}

std::string PromptSet::version() const {
    std::string all;
    for (const auto& [name, text] : templates_) {
        all += name;
        all += '\0';
        all += text;
        all += '\0';
    }
    return sha256_hex(all);
}

std::string render_template(const std::string& tpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tpl.size());
    std::size_t pos = 0;
    while (pos < tpl.size()) {
        const auto open = tpl.find("{{", pos);
        if (open == std::string::npos) {
            out.append(tpl, pos);
            break;
        }
        const auto close = tpl.find("}}", open + 2);
        if (close == std::string::npos) {
            out.append(tpl, pos);
            break;
        }
        out.append(tpl, pos, open - pos);
        const auto name = tpl.substr(open + 2, close - open - 2);
        auto it = vars.find(name);
        if (it == vars.end()) throw Error(ErrorKind::Config, "no value for prompt placeholder '{{" + name + "}}'");
        out += it->second;
        pos = close + 2;
    }
    return out;
}

}  // namespace drp
