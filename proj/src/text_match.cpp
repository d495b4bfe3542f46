#include "studyroute/text_match.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

#include "studyroute/mapping_db.hpp"

namespace studyroute {

namespace {

// ASCII fallbacks for the Latin letters that show up in European study
// descriptions. Anything non-ASCII without an entry here is dropped.
const char* transliterate(char32_t cp) {
    switch (cp) {
        case 0x00C0: case 0x00C1: case 0x00C2: case 0x00C3: case 0x00C4: case 0x00C5:
        case 0x00E0: case 0x00E1: case 0x00E2: case 0x00E3: case 0x00E4: case 0x00E5:
        case 0x0100: case 0x0101: case 0x0104: case 0x0105:
            return "A";
        case 0x00C6: case 0x00E6: return "AE";
        case 0x00C7: case 0x00E7: case 0x0106: case 0x0107: case 0x010C: case 0x010D:
            return "C";
        case 0x00C8: case 0x00C9: case 0x00CA: case 0x00CB:
        case 0x00E8: case 0x00E9: case 0x00EA: case 0x00EB:
        case 0x0112: case 0x0113: case 0x0118: case 0x0119:
            return "E";
        case 0x00CC: case 0x00CD: case 0x00CE: case 0x00CF:
        case 0x00EC: case 0x00ED: case 0x00EE: case 0x00EF:
            return "I";
        case 0x00D0: case 0x00F0: case 0x0110: case 0x0111: return "D";
        case 0x00D1: case 0x00F1: case 0x0143: case 0x0144: return "N";
        case 0x00D2: case 0x00D3: case 0x00D4: case 0x00D5: case 0x00D6: case 0x00D8:
        case 0x00F2: case 0x00F3: case 0x00F4: case 0x00F5: case 0x00F6: case 0x00F8:
            return "O";
        case 0x0152: case 0x0153: return "OE";
        case 0x0160: case 0x0161: case 0x015A: case 0x015B: return "S";
        case 0x00D9: case 0x00DA: case 0x00DB: case 0x00DC:
        case 0x00F9: case 0x00FA: case 0x00FB: case 0x00FC:
            return "U";
        case 0x00DD: case 0x00FD: case 0x00FF: case 0x0178: return "Y";
        case 0x00DE: case 0x00FE: return "TH";
        case 0x00DF: return "SS";
        case 0x017D: case 0x017E: case 0x0179: case 0x017A: case 0x017B: case 0x017C:
            return "Z";
        default: return nullptr;
    }
}

bool is_separator_codepoint(char32_t cp) {
    // Latin-1 punctuation/symbols plus the general punctuation block.
    if (cp >= 0x00A0 && cp <= 0x00BF) return true;
    if (cp == 0x00D7 || cp == 0x00F7) return true;
    if (cp >= 0x2000 && cp <= 0x206F) return true;
    return false;
}

// Decodes one UTF-8 codepoint at s[i], advancing i. Bytes that are not
// valid UTF-8 are read as Latin-1, which is what older DICOM exports use.
char32_t decode_codepoint(const unsigned char* s, std::size_t n, std::size_t& i) {
    unsigned char b0 = s[i];
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int extra = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        extra = 1;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        extra = 2;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        extra = 3;
        cp = b0 & 0x07;
    } else {
        ++i;
        return b0;  // stray continuation byte: Latin-1 fallback
    }
    if (i + static_cast<std::size_t>(extra) >= n) {
        // truncated sequence
        ++i;
        return b0;
    }
    for (int k = 1; k <= extra; ++k) {
        unsigned char bk = s[i + k];
        if ((bk & 0xC0) != 0x80) {
            ++i;
            return b0;  // malformed: Latin-1 fallback
        }
        cp = (cp << 6) | (bk & 0x3F);
    }
    i += static_cast<std::size_t>(extra) + 1;
    return cp;
}

}  // namespace

std::string normalize_text(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    auto push = [&](char c) {
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    };
    const auto* p = reinterpret_cast<const unsigned char*>(s.data());
    std::size_t i = 0;
    while (i < s.size()) {
        char32_t cp = decode_codepoint(p, s.size(), i);
        if (cp < 0x80) {
            auto c = static_cast<unsigned char>(cp);
            if (std::isalnum(c))
                push(static_cast<char>(std::toupper(c)));
            else
                pending_space = true;
        } else if (const char* t = transliterate(cp)) {
            for (const char* q = t; *q; ++q) push(*q);
        } else if (is_separator_codepoint(cp)) {
            pending_space = true;
        }
        // other non-ASCII codepoints are dropped outright
    }
    return out;
}

lcs_result longest_common_substring(std::string_view a, std::string_view b) {
    if (a.empty() || b.empty()) return {0, ""};
    std::vector<int> prev(b.size() + 1, 0);
    std::vector<int> cur(b.size() + 1, 0);
    int best_len = 0;
    std::size_t best_start = 0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] != b[j - 1]) {
                cur[j] = 0;
                continue;
            }
            cur[j] = prev[j - 1] + 1;
            int len = cur[j];
            std::size_t start = i - static_cast<std::size_t>(len);
            if (len > best_len || (len == best_len && start < best_start)) {
                best_len = len;
                best_start = start;
            }
        }
        std::swap(prev, cur);
    }
    return {best_len, std::string(a.substr(best_start, static_cast<std::size_t>(best_len)))};
}

std::optional<match_result> match_keyword(std::string_view text, std::string_view keyword,
                                          bool is_short) {
    if (text.empty() || keyword.empty()) return std::nullopt;
    if (is_short) {
        // Whole-token match only: "HAND" must not fire inside "HANDGELENK".
        std::string padded_text = " ";
        padded_text.append(text);
        padded_text.push_back(' ');
        std::string padded_kw = " ";
        padded_kw.append(keyword);
        padded_kw.push_back(' ');
        if (padded_text.find(padded_kw) == std::string::npos) return std::nullopt;
        return match_result{"", std::string(keyword), static_cast<int>(keyword.size()), true};
    }
    lcs_result lcs = longest_common_substring(text, keyword);
    if (lcs.length < 6) return std::nullopt;
    bool full = static_cast<std::size_t>(lcs.length) == keyword.size();
    return match_result{"", std::string(keyword), lcs.length, full};
}

std::optional<match_result> best_keyword_match(std::string_view text, const mapping_database& db) {
    std::optional<match_result> best;
    bool ambiguous = false;
    auto consider = [&](const std::string& class_id, const std::string& kw, bool is_short) {
        auto m = match_keyword(text, kw, is_short);
        if (!m) return;
        if (!best || m->match_length > best->match_length) {
            best = std::move(*m);
            best->class_id = class_id;
            ambiguous = false;
        } else if (m->match_length == best->match_length && class_id != best->class_id) {
            ambiguous = true;
        }
    };
    for (const auto& [class_id, kws] : db.keywords())
        for (const auto& kw : kws) consider(class_id, kw, false);
    for (const auto& [class_id, kws] : db.short_keywords())
        for (const auto& kw : kws) consider(class_id, kw, true);
    if (!best || ambiguous) return std::nullopt;
    return best;
}

}  // namespace studyroute
