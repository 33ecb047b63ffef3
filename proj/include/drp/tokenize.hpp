#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace drp {

// Lowercase word tokens produced by the canonical tokenizer. Every metric and
// every string-canonicalization step goes through this one tokenizer so that
// scores stay comparable.
struct TokenSequence {
    std::vector<std::string> tokens;

    [[nodiscard]] std::size_t size() const noexcept { return tokens.size(); }
    [[nodiscard]] bool empty() const noexcept { return tokens.empty(); }
    bool operator==(const TokenSequence&) const = default;
};

// Unicode lowercase, split on Unicode whitespace, strip leading/trailing
// characters of the Unicode punctuation category, drop empty tokens.
// Intra-token apostrophes and hyphens survive ("don't", "well-known").
[[nodiscard]] TokenSequence tokenize(std::string_view text);

// Trim ASCII and Unicode whitespace from both ends.
[[nodiscard]] std::string trim(std::string_view text);

}  // namespace drp
