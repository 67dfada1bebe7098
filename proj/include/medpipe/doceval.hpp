#pragma once

#include <map>
#include <string>
#include <vector>

#include "medpipe/canonical.hpp"

namespace medpipe {

// One laboratory table row. Raw fields as extracted plus cached canonical
// comparison forms; entry_name must be non-empty.
struct LabRow {
    std::string entry_name;
    std::string result;
    std::string reference;
    std::string unit;

    std::string c_entry;
    std::string c_result;
    std::string c_reference;
    std::string c_unit;
    ResultFlag result_flag = ResultFlag::None;

    bool operator==(const LabRow&) const = default;
};

LabRow make_lab_row(const std::string& entry_name, const std::string& result,
                    const std::string& reference, const std::string& unit);

struct LabTable {
    std::vector<LabRow> rows;
    std::vector<std::string> warnings;
};

// Extracts the first pipe-delimited markdown table with >= 4 columns.
// Header and separator rows are skipped; short rows are padded with empty
// cells, extra columns are dropped with a warning; rows identical to an
// earlier row after canonicalization are collapsed. Throws Error("no_table")
// when the text contains no such table.
LabTable parse_markdown_table(const std::string& text);

inline constexpr double kNameMatchThreshold = 0.85;

struct MatchedPair {
    int pred_row;
    int gold_row;

    bool operator==(const MatchedPair&) const = default;
};

// Maximum-cardinality one-to-one matching between pred and gold rows.
// Edges join rows whose canonical entry names are equal or have edit
// similarity >= kNameMatchThreshold; exact-name edges are matched first and
// ties break by row order. Result is sorted by pred_row.
std::vector<MatchedPair> match_entries(const LabTable& pred, const LabTable& gold);

struct FieldCounts {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
};

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

PRF prf_from_counts(const FieldCounts& c);

inline const std::vector<std::string>& lab_field_names() {
    static const std::vector<std::string> v = {"entry_name", "result", "reference", "unit"};
    return v;
}

// Field-slot scores for one document. Matched pairs contribute one TP per
// canonically equal field and one FP plus one FN per differing field;
// unmatched gold rows contribute 4 FN, unmatched pred rows 4 FP.
struct DocScore {
    FieldCounts total;
    std::map<std::string, FieldCounts> per_field;
    PRF prf;
};

DocScore score_full_parse(const LabTable& pred, const LabTable& gold);

// Micro scores pool field slots across documents; macro_doc_f1 averages the
// per-document F1.
struct FieldScores {
    PRF micro;
    double macro_doc_f1 = 0.0;
    std::map<std::string, PRF> per_field;
    std::map<std::string, FieldCounts> per_field_counts;
    FieldCounts total;
};

FieldScores aggregate_scores(const std::vector<DocScore>& docs);

// Exact match (1/0) after canonicalization. When the rule check fails and
// judge_command is non-empty, the external judge decides: its score is
// binarized at >= 0.5. Judge failures propagate as Error("judge_failed").
int score_simple_qa(const std::string& pred, const std::string& gold,
                    const std::string& judge_command = "");

// Queried-entry answer: result and reference compared canonically, the
// abnormality label compared case-insensitively. Same FP+FN accounting as
// full parsing, three field slots per item.
struct ComplexItem {
    std::string result;
    std::string reference;
    std::string abnormal;
};

DocScore score_complex_qa(const ComplexItem& pred, const ComplexItem& gold);

enum class ConsensusBucket { Easy, Hard, Discard };

// agree_before -> Easy; resolved only by the clean round -> Hard;
// everything else -> Discard.
ConsensusBucket consensus_bucket(bool agree_before, bool agree_after);

const char* to_string(ConsensusBucket b);

}  // namespace medpipe
