#pragma once

#include <string>
#include <vector>

namespace medpipe {

enum class FieldKind { EntryName, Result, Reference, Unit, Answer };

// Marker stripped off a result value, kept aside from the canonical text.
enum class ResultFlag { None, High, Low, Abnormal };

struct CanonicalResult {
    std::string text;
    ResultFlag flag = ResultFlag::None;
};

// Text normalization applied before any comparison, in order: full-width to
// half-width folding (including superscript digits, which fold to ^digits),
// whitespace trim/collapse, dash variants to "-", thousands separators
// removed from purely numeric strings, case folding for EntryName/Unit/Answer,
// and result markers (*, up/down arrows, H/L suffixed to numbers) stripped.
// Idempotent for every kind.
std::string canonicalize(const std::string& s, FieldKind kind);

// Like canonicalize(s, Result) but also reports the stripped marker.
CanonicalResult canonicalize_result(const std::string& s);

std::vector<char32_t> utf8_decode(const std::string& s);
std::string utf8_encode(const std::vector<char32_t>& cps);

// 1 - levenshtein/max(len), measured on code points. Two empty strings
// compare as 1.
double edit_similarity(const std::string& a, const std::string& b);

enum class IntervalKind { Closed, LessThan, AtMost, GreaterThan, AtLeast, Unparseable };

struct ReferenceInterval {
    IntervalKind kind = IntervalKind::Unparseable;
    double lower = 0.0;
    double upper = 0.0;

    bool operator==(const ReferenceInterval&) const = default;
};

// Parses a canonicalized reference string: "a-b", "<b", "<=b", ">a", ">=a"
// (unicode <= and >= accepted). Anything else, including a-b with a > b,
// is Unparseable.
ReferenceInterval parse_reference_interval(const std::string& canonical);

enum class Abnormality { Low, Normal, High, Unknown };

// Classifies a canonical numeric result against an interval. Values sitting
// exactly on a closed or at-most/at-least bound are Normal. Non-numeric
// results or unparseable intervals give Unknown.
Abnormality classify_abnormality(const std::string& canonical_result,
                                 const ReferenceInterval& ref);

const char* to_string(Abnormality a);
Abnormality abnormality_from_string(const std::string& s);

}  // namespace medpipe
