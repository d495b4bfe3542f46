#ifndef STUDYROUTE_TEXT_MATCH_HPP
#define STUDYROUTE_TEXT_MATCH_HPP

#include <optional>
#include <string>
#include <string_view>

namespace studyroute {

class mapping_database;

/// Outcome of matching a class keyword against a metadata text.
struct match_result {
    std::string class_id;         ///< owning class (empty in keyword fragments)
    std::string matched_keyword;  ///< the normalized keyword that matched
    int match_length = 0;         ///< >= 6 for partial matches, >= 4 for exact short ones
    bool exact = false;           ///< the keyword was matched in full
};

/// Canonical text form used by every matcher: uppercase ASCII, alnum runs
/// separated by single spaces, trimmed. Unicode letters are transliterated
/// where a standard ASCII fallback exists (A-umlaut -> A, eszett -> SS, ...)
/// and dropped otherwise. Idempotent.
std::string normalize_text(std::string_view s);

struct lcs_result {
    int length = 0;
    std::string substring;
};

/// Longest contiguous common substring of two normalized texts. Ties are
/// broken by the earliest start position in `a`; (0, "") when nothing is
/// shared.
lcs_result longest_common_substring(std::string_view a, std::string_view b);

/// Match one keyword against a normalized text. Regular keywords match via
/// longest_common_substring with a minimum overlap of 6 characters; short
/// keywords (normalized length 4-5) only match as a whole space-delimited
/// token. Returns a fragment without class_id.
std::optional<match_result> match_keyword(std::string_view text, std::string_view keyword,
                                          bool is_short);

/// Evaluate every keyword of every class against a normalized text and keep
/// the longest match. When the maximal length is shared by keywords of
/// different classes the result is absent (ambiguity escalates to the next
/// decision layer).
std::optional<match_result> best_keyword_match(std::string_view text, const mapping_database& db);

}  // namespace studyroute

#endif  // STUDYROUTE_TEXT_MATCH_HPP
