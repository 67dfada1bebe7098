#pragma once

#include <string>
#include <vector>

namespace medpipe {

// LCS-based F1 with beta = 1: R = LCS/|ref|, P = LCS/|cand|,
// F1 = 2PR/(P+R). Degenerate inputs (either side empty, or no overlap)
// score 0.
double rouge_l(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference);

// Consensus n-gram metric over 1..4-grams: per n, cosine similarity of
// TF-IDF vectors with document frequencies taken over the reference corpus,
// averaged over n, scaled by 10, then averaged over items. One reference per
// candidate. For a single-item corpus the IDF log-N factor degenerates to 0,
// so it is replaced by 1; an identical pair then scores exactly 10.
double cider(const std::vector<std::vector<std::string>>& candidates,
             const std::vector<std::vector<std::string>>& references);

std::vector<std::string> whitespace_tokenize(const std::string& text);

}  // namespace medpipe
