#include "medpipe/textmetrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>

#include "medpipe/error.hpp"

namespace medpipe {

double rouge_l(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference) {
    const std::size_t n = candidate.size(), m = reference.size();
    if (n == 0 || m == 0) return 0.0;
    std::vector<std::size_t> prev(m + 1, 0), cur(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            if (candidate[i - 1] == reference[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    const double lcs = static_cast<double>(prev[m]);
    if (lcs == 0.0) return 0.0;
    const double p = lcs / static_cast<double>(n);
    const double r = lcs / static_cast<double>(m);
    return 2.0 * p * r / (p + r);
}

namespace {

constexpr int kMaxN = 4;

// n-gram term frequencies for n = 1..4. Tokens contain no spaces, so
// space-joined keys are unambiguous per n.
using NGramCounts = std::map<std::string, long long>;

std::array<NGramCounts, kMaxN> count_ngrams(const std::vector<std::string>& tokens) {
    std::array<NGramCounts, kMaxN> out;
    for (int n = 1; n <= kMaxN; ++n) {
        if (tokens.size() < static_cast<std::size_t>(n)) break;
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            std::string key = tokens[i];
            for (int k = 1; k < n; ++k) key += " " + tokens[i + k];
            ++out[n - 1][key];
        }
    }
    return out;
}

}  // namespace

double cider(const std::vector<std::vector<std::string>>& candidates,
             const std::vector<std::vector<std::string>>& references) {
    if (candidates.size() != references.size())
        throw Error("length_mismatch", "one reference per candidate required");
    if (candidates.empty())
        throw Error("length_mismatch", "corpus must be non-empty");

    const std::size_t corpus = references.size();

    std::vector<std::array<NGramCounts, kMaxN>> ref_counts, cand_counts;
    ref_counts.reserve(corpus);
    cand_counts.reserve(corpus);
    for (std::size_t i = 0; i < corpus; ++i) {
        ref_counts.push_back(count_ngrams(references[i]));
        cand_counts.push_back(count_ngrams(candidates[i]));
    }

    // Document frequency over the reference corpus.
    std::array<NGramCounts, kMaxN> df;
    for (const auto& rc : ref_counts)
        for (int n = 0; n < kMaxN; ++n)
            for (const auto& [key, cnt] : rc[n]) ++df[n][key];

    const double log_corpus = corpus == 1 ? 1.0 : std::log(static_cast<double>(corpus));
    auto idf = [&](int n, const std::string& key) {
        const auto it = df[n].find(key);
        const double d = it == df[n].end() ? 0.0 : static_cast<double>(it->second);
        return log_corpus - std::log(std::max(1.0, d));
    };

    double total = 0.0;
    for (std::size_t i = 0; i < corpus; ++i) {
        double item = 0.0;
        for (int n = 0; n < kMaxN; ++n) {
            double dot = 0.0, nc = 0.0, nr = 0.0;
            for (const auto& [key, cnt] : cand_counts[i][n]) {
                const double w = static_cast<double>(cnt) * idf(n, key);
                nc += w * w;
                const auto it = ref_counts[i][n].find(key);
                if (it != ref_counts[i][n].end())
                    dot += w * static_cast<double>(it->second) * idf(n, key);
            }
            for (const auto& [key, cnt] : ref_counts[i][n]) {
                const double w = static_cast<double>(cnt) * idf(n, key);
                nr += w * w;
            }
            if (nc > 0.0 && nr > 0.0) item += dot / (std::sqrt(nc) * std::sqrt(nr));
        }
        total += 10.0 * item / kMaxN;
    }
    return total / static_cast<double>(corpus);
}

std::vector<std::string> whitespace_tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

}  // namespace medpipe
