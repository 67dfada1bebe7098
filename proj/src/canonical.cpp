#include "medpipe/canonical.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>

namespace medpipe {

std::vector<char32_t> utf8_decode(const std::string& s) {
    std::vector<char32_t> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char c = s[i];
        char32_t cp = 0;
        int extra = 0;
        if (c < 0x80) {
            cp = c;
        } else if ((c & 0xE0) == 0xC0) {
            cp = c & 0x1F;
            extra = 1;
        } else if ((c & 0xF0) == 0xE0) {
            cp = c & 0x0F;
            extra = 2;
        } else if ((c & 0xF8) == 0xF0) {
            cp = c & 0x07;
            extra = 3;
        } else {
            cp = 0xFFFD;  // invalid byte: replacement character
        }
        ++i;
        for (int k = 0; k < extra && i < s.size(); ++k) {
            const unsigned char cc = s[i];
            if ((cc & 0xC0) != 0x80) break;
            cp = (cp << 6) | (cc & 0x3F);
            ++i;
        }
        out.push_back(cp);
    }
    return out;
}

std::string utf8_encode(const std::vector<char32_t>& cps) {
    std::string out;
    for (const char32_t cp : cps) {
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }
    return out;
}

namespace {

std::optional<char32_t> superscript_digit(char32_t cp) {
    switch (cp) {
        case 0x2070: return U'0';
        case 0x00B9: return U'1';
        case 0x00B2: return U'2';
        case 0x00B3: return U'3';
        case 0x2074: return U'4';
        case 0x2075: return U'5';
        case 0x2076: return U'6';
        case 0x2077: return U'7';
        case 0x2078: return U'8';
        case 0x2079: return U'9';
        default: return std::nullopt;
    }
}

bool is_space_cp(char32_t cp) {
    return cp == U' ' || cp == U'\t' || cp == U'\r' || cp == U'\n';
}

bool is_digit_cp(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

// Full-width forms fold to ASCII; dash variants fold to '-'; superscript
// digit runs fold to "^digits".
std::vector<char32_t> fold_codepoints(const std::vector<char32_t>& in) {
    std::vector<char32_t> out;
    out.reserve(in.size());
    bool in_super = false;
    for (const char32_t raw : in) {
        char32_t cp = raw;
        if (cp == 0x3000) cp = U' ';                                // ideographic space
        else if (cp >= 0xFF01 && cp <= 0xFF5E) cp = cp - 0xFEE0;    // full-width ASCII block
        if (const auto d = superscript_digit(cp)) {
            if (!in_super) out.push_back(U'^');
            in_super = true;
            out.push_back(*d);
            continue;
        }
        in_super = false;
        if (cp == 0x2013 || cp == 0x2014 || cp == U'~') cp = U'-';  // dash variants
        out.push_back(cp);
    }
    return out;
}

std::vector<char32_t> collapse_whitespace(const std::vector<char32_t>& in) {
    std::vector<char32_t> out;
    bool pending_space = false;
    for (const char32_t cp : in) {
        if (is_space_cp(cp)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(U' ');
            pending_space = false;
        }
        out.push_back(cp);
    }
    return out;
}

// Removes grouping commas only when the whole string is a number with
// correctly placed 3-digit groups.
std::vector<char32_t> strip_thousands(const std::vector<char32_t>& in) {
    std::size_t i = 0;
    if (i < in.size() && (in[i] == U'+' || in[i] == U'-')) ++i;
    std::size_t lead = 0;
    while (i < in.size() && is_digit_cp(in[i])) {
        ++lead;
        ++i;
    }
    if (lead < 1 || lead > 3) return in;
    std::size_t groups = 0;
    while (i + 3 < in.size() && in[i] == U',' && is_digit_cp(in[i + 1]) &&
           is_digit_cp(in[i + 2]) && is_digit_cp(in[i + 3])) {
        ++groups;
        i += 4;
    }
    if (groups == 0) return in;
    if (i < in.size()) {
        if (in[i] != U'.') return in;
        ++i;
        std::size_t frac = 0;
        while (i < in.size() && is_digit_cp(in[i])) {
            ++frac;
            ++i;
        }
        if (frac == 0 || i != in.size()) return in;
    }
    std::vector<char32_t> out;
    for (const char32_t cp : in)
        if (cp != U',') out.push_back(cp);
    return out;
}

bool parse_number_cps(const std::vector<char32_t>& cps, std::size_t begin,
                      std::size_t end, double* value);

// Strips leading/trailing *, up/down arrows and a trailing H/L attached to a
// number. Reports the strongest marker seen (arrows and H/L beat *).
std::vector<char32_t> strip_markers(std::vector<char32_t> v, ResultFlag* flag) {
    *flag = ResultFlag::None;
    bool changed = true;
    while (changed && !v.empty()) {
        changed = false;
        const char32_t front = v.front();
        if (front == U'*' || front == 0x2191 || front == 0x2193) {
            if (front == 0x2191) *flag = ResultFlag::High;
            else if (front == 0x2193) *flag = ResultFlag::Low;
            else if (*flag == ResultFlag::None) *flag = ResultFlag::Abnormal;
            v.erase(v.begin());
            changed = true;
            continue;
        }
        const char32_t back = v.back();
        if (back == U'*' || back == 0x2191 || back == 0x2193) {
            if (back == 0x2191) *flag = ResultFlag::High;
            else if (back == 0x2193) *flag = ResultFlag::Low;
            else if (*flag == ResultFlag::None) *flag = ResultFlag::Abnormal;
            v.pop_back();
            changed = true;
            continue;
        }
        if (back == U'H' || back == U'L') {
            // Only when what precedes (minus one optional space) is a number.
            std::size_t end = v.size() - 1;
            if (end > 0 && v[end - 1] == U' ') --end;
            if (end > 0 && parse_number_cps(v, 0, end, nullptr)) {
                *flag = (back == U'H') ? ResultFlag::High : ResultFlag::Low;
                v.resize(end);
                changed = true;
                continue;
            }
        }
    }
    // Stripping may expose surrounding whitespace.
    while (!v.empty() && is_space_cp(v.front())) v.erase(v.begin());
    while (!v.empty() && is_space_cp(v.back())) v.pop_back();
    return v;
}

bool parse_number_cps(const std::vector<char32_t>& cps, std::size_t begin,
                      std::size_t end, double* value) {
    if (begin >= end) return false;
    std::string s;
    for (std::size_t i = begin; i < end; ++i) {
        const char32_t cp = cps[i];
        if (cp > 0x7F) return false;
        s += static_cast<char>(cp);
    }
    std::size_t i = 0;
    if (s[i] == '+' || s[i] == '-') ++i;
    std::size_t digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        ++digits;
        ++i;
    }
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
            ++digits;
            ++i;
        }
    }
    if (digits == 0 || i != s.size()) return false;
    if (value) *value = std::stod(s);
    return true;
}

}  // namespace

CanonicalResult canonicalize_result(const std::string& s) {
    auto v = fold_codepoints(utf8_decode(s));
    v = collapse_whitespace(v);
    v = strip_thousands(v);
    CanonicalResult out;
    v = strip_markers(std::move(v), &out.flag);
    v = strip_thousands(v);  // markers may have hidden a plain number
    out.text = utf8_encode(v);
    return out;
}

std::string canonicalize(const std::string& s, FieldKind kind) {
    if (kind == FieldKind::Result) return canonicalize_result(s).text;
    auto v = fold_codepoints(utf8_decode(s));
    v = collapse_whitespace(v);
    v = strip_thousands(v);
    if (kind == FieldKind::EntryName || kind == FieldKind::Unit ||
        kind == FieldKind::Answer) {
        for (auto& cp : v)
            if (cp >= U'A' && cp <= U'Z') cp = cp + (U'a' - U'A');
    }
    return utf8_encode(v);
}

double edit_similarity(const std::string& a, const std::string& b) {
    const auto ca = utf8_decode(a), cb = utf8_decode(b);
    const std::size_t n = ca.size(), m = cb.size();
    if (n == 0 && m == 0) return 1.0;
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t sub = prev[j - 1] + (ca[i - 1] == cb[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    const double dist = static_cast<double>(prev[m]);
    return 1.0 - dist / static_cast<double>(std::max(n, m));
}

namespace {

bool take_number(const std::vector<char32_t>& v, std::size_t& i, double* value) {
    std::size_t j = i;
    if (j < v.size() && (v[j] == U'+' || v[j] == U'-')) ++j;
    std::size_t digits = 0;
    while (j < v.size() && is_digit_cp(v[j])) {
        ++digits;
        ++j;
    }
    if (j < v.size() && v[j] == U'.') {
        ++j;
        while (j < v.size() && is_digit_cp(v[j])) {
            ++digits;
            ++j;
        }
    }
    if (digits == 0) return false;
    if (!parse_number_cps(v, i, j, value)) return false;
    i = j;
    return true;
}

void skip_spaces(const std::vector<char32_t>& v, std::size_t& i) {
    while (i < v.size() && v[i] == U' ') ++i;
}

}  // namespace

ReferenceInterval parse_reference_interval(const std::string& canonical) {
    ReferenceInterval out;
    auto v = utf8_decode(canonical);

    std::size_t i = 0;
    skip_spaces(v, i);
    if (i >= v.size()) return out;

    // One-sided forms. U+2264 / U+2265 are the unicode <= / >=.
    IntervalKind one_sided = IntervalKind::Unparseable;
    if (v[i] == 0x2264) {
        one_sided = IntervalKind::AtMost;
        ++i;
    } else if (v[i] == 0x2265) {
        one_sided = IntervalKind::AtLeast;
        ++i;
    } else if (v[i] == U'<') {
        ++i;
        one_sided = IntervalKind::LessThan;
        if (i < v.size() && v[i] == U'=') {
            one_sided = IntervalKind::AtMost;
            ++i;
        }
    } else if (v[i] == U'>') {
        ++i;
        one_sided = IntervalKind::GreaterThan;
        if (i < v.size() && v[i] == U'=') {
            one_sided = IntervalKind::AtLeast;
            ++i;
        }
    }
    if (one_sided != IntervalKind::Unparseable) {
        skip_spaces(v, i);
        double bound = 0.0;
        if (!take_number(v, i, &bound)) return out;
        skip_spaces(v, i);
        if (i != v.size()) return out;
        out.kind = one_sided;
        if (one_sided == IntervalKind::LessThan || one_sided == IntervalKind::AtMost)
            out.upper = bound;
        else
            out.lower = bound;
        return out;
    }

    // Closed form a-b.
    double lo = 0.0, hi = 0.0;
    if (!take_number(v, i, &lo)) return out;
    skip_spaces(v, i);
    if (i >= v.size() || v[i] != U'-') return out;
    ++i;
    skip_spaces(v, i);
    if (!take_number(v, i, &hi)) return out;
    skip_spaces(v, i);
    if (i != v.size()) return out;
    if (lo > hi) return out;
    out.kind = IntervalKind::Closed;
    out.lower = lo;
    out.upper = hi;
    return out;
}

Abnormality classify_abnormality(const std::string& canonical_result,
                                 const ReferenceInterval& ref) {
    if (ref.kind == IntervalKind::Unparseable) return Abnormality::Unknown;
    const auto v = utf8_decode(canonical_result);
    double r = 0.0;
    if (!parse_number_cps(v, 0, v.size(), &r)) return Abnormality::Unknown;
    switch (ref.kind) {
        case IntervalKind::Closed:
            if (r < ref.lower) return Abnormality::Low;
            if (r > ref.upper) return Abnormality::High;
            return Abnormality::Normal;
        case IntervalKind::LessThan:
            return r < ref.upper ? Abnormality::Normal : Abnormality::High;
        case IntervalKind::AtMost:
            return r <= ref.upper ? Abnormality::Normal : Abnormality::High;
        case IntervalKind::GreaterThan:
            return r > ref.lower ? Abnormality::Normal : Abnormality::Low;
        case IntervalKind::AtLeast:
            return r >= ref.lower ? Abnormality::Normal : Abnormality::Low;
        default:
            return Abnormality::Unknown;
    }
}

const char* to_string(Abnormality a) {
    switch (a) {
        case Abnormality::Low: return "Low";
        case Abnormality::Normal: return "Normal";
        case Abnormality::High: return "High";
        default: return "Unknown";
    }
}

Abnormality abnormality_from_string(const std::string& s) {
    std::string t;
    for (const char c : s) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (t == "low") return Abnormality::Low;
    if (t == "normal") return Abnormality::Normal;
    if (t == "high") return Abnormality::High;
    return Abnormality::Unknown;
}

}  // namespace medpipe
