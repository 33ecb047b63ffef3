#include "drp/tokenize.hpp"

#include <unicode/uchar.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>

namespace drp {
namespace {

bool is_space(UChar32 c) { return u_isUWhiteSpace(c) != 0; }

std::string to_utf8(const icu::UnicodeString& s) {
    std::string out;
    s.toUTF8String(out);
    return out;
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
    icu::UnicodeString lowered =
        icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    lowered.toLower(icu::Locale::getRoot());

    TokenSequence out;
    const int32_t n = lowered.length();
    int32_t i = 0;
    while (i < n) {
        while (i < n && is_space(lowered.char32At(i))) i = lowered.moveIndex32(i, 1);
        int32_t start = i;
        while (i < n && !is_space(lowered.char32At(i))) i = lowered.moveIndex32(i, 1);
        int32_t end = i;

        // strip punctuation at the edges
        while (start < end && u_ispunct(lowered.char32At(start))) start = lowered.moveIndex32(start, 1);
        while (end > start) {
            int32_t prev = lowered.moveIndex32(end, -1);
            if (!u_ispunct(lowered.char32At(prev))) break;
            end = prev;
        }
        if (end > start) out.tokens.push_back(to_utf8(icu::UnicodeString(lowered, start, end - start)));
    }
    return out;
}

std::string trim(std::string_view text) {
    icu::UnicodeString s =
        icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    int32_t start = 0;
    int32_t end = s.length();
    while (start < end && is_space(s.char32At(start))) start = s.moveIndex32(start, 1);
    while (end > start) {
        int32_t prev = s.moveIndex32(end, -1);
        if (!is_space(s.char32At(prev))) break;
        end = prev;
    }
    return to_utf8(icu::UnicodeString(s, start, end - start));
}

}  // namespace drp
