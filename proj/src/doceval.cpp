#include "medpipe/doceval.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <sstream>

#include "medpipe/error.hpp"
#include "medpipe/judge.hpp"

#include "json.hpp"

namespace medpipe {

LabRow make_lab_row(const std::string& entry_name, const std::string& result,
                    const std::string& reference, const std::string& unit) {
    LabRow row;
    row.entry_name = entry_name;
    row.result = result;
    row.reference = reference;
    row.unit = unit;
    row.c_entry = canonicalize(entry_name, FieldKind::EntryName);
    const CanonicalResult cr = canonicalize_result(result);
    row.c_result = cr.text;
    row.result_flag = cr.flag;
    row.c_reference = canonicalize(reference, FieldKind::Reference);
    row.c_unit = canonicalize(unit, FieldKind::Unit);
    return row;
}

namespace {

std::vector<std::string> split_cells(const std::string& line) {
    // Leading/trailing pipes delimit the row; inner pipes split cells.
    std::string s = line;
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return {};
    s = s.substr(b, e - b + 1);
    if (!s.empty() && s.front() == '|') s.erase(s.begin());
    if (!s.empty() && s.back() == '|') s.pop_back();
    std::vector<std::string> cells;
    std::string cur;
    for (const char c : s) {
        if (c == '|') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(cur);
    for (auto& cell : cells) {
        const std::size_t cb = cell.find_first_not_of(" \t");
        if (cb == std::string::npos) {
            cell.clear();
            continue;
        }
        const std::size_t ce = cell.find_last_not_of(" \t");
        cell = cell.substr(cb, ce - cb + 1);
    }
    return cells;
}

bool is_separator_row(const std::vector<std::string>& cells) {
    if (cells.empty()) return false;
    for (const auto& c : cells) {
        if (c.empty()) continue;
        for (const char ch : c)
            if (ch != '-' && ch != ':' && ch != ' ') return false;
        if (c.find('-') == std::string::npos) return false;
    }
    return true;
}

}  // namespace

LabTable parse_markdown_table(const std::string& text) {
    std::vector<std::vector<std::string>> block;
    bool found = false;

    std::istringstream lines(text);
    std::string line;
    std::vector<std::vector<std::string>> current;
    auto flush = [&]() {
        if (!found && !current.empty() && current.front().size() >= 4) {
            block = current;
            found = true;
        }
        current.clear();
    };
    while (std::getline(lines, line)) {
        if (line.find('|') != std::string::npos) {
            current.push_back(split_cells(line));
        } else {
            flush();
        }
    }
    flush();
    if (!found) throw Error("no_table", "no pipe table with at least 4 columns");

    LabTable table;
    std::vector<std::array<std::string, 4>> seen;
    for (std::size_t r = 1; r < block.size(); ++r) {  // row 0 is the header
        auto cells = block[r];
        if (r == 1 && is_separator_row(cells)) continue;
        if (cells.size() > 4) {
            table.warnings.push_back("row " + std::to_string(r) +
                                     ": extra columns ignored");
            cells.resize(4);
        }
        while (cells.size() < 4) cells.emplace_back();
        LabRow row = make_lab_row(cells[0], cells[1], cells[2], cells[3]);
        if (row.entry_name.empty()) {
            table.warnings.push_back("row " + std::to_string(r) +
                                     ": empty entry name dropped");
            continue;
        }
        const std::array<std::string, 4> key = {row.c_entry, row.c_result,
                                                row.c_reference, row.c_unit};
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        table.rows.push_back(std::move(row));
    }
    return table;
}

namespace {

// Kuhn's augmenting-path matching; adj lists gold candidates per pred row.
struct Matcher {
    const std::vector<std::vector<int>>& adj;
    std::vector<int> gold_of_pred;
    std::vector<int> pred_of_gold;
    std::vector<char> visited;

    explicit Matcher(const std::vector<std::vector<int>>& a, std::size_t n_pred,
                     std::size_t n_gold)
        : adj(a),
          gold_of_pred(n_pred, -1),
          pred_of_gold(n_gold, -1),
          visited(n_gold, 0) {}

    bool augment(int p) {
        for (const int g : adj[p]) {
            if (visited[g]) continue;
            visited[g] = 1;
            if (pred_of_gold[g] < 0 || augment(pred_of_gold[g])) {
                gold_of_pred[p] = g;
                pred_of_gold[g] = p;
                return true;
            }
        }
        return false;
    }

    void run() {
        for (int p = 0; p < static_cast<int>(adj.size()); ++p) {
            if (gold_of_pred[p] >= 0) continue;
            std::fill(visited.begin(), visited.end(), 0);
            augment(p);
        }
    }
};

}  // namespace

std::vector<MatchedPair> match_entries(const LabTable& pred, const LabTable& gold) {
    const std::size_t np = pred.rows.size(), ng = gold.rows.size();

    std::vector<std::vector<int>> exact(np), fuzzy(np);
    for (std::size_t p = 0; p < np; ++p) {
        for (std::size_t g = 0; g < ng; ++g) {
            const auto& a = pred.rows[p].c_entry;
            const auto& b = gold.rows[g].c_entry;
            if (a == b) {
                exact[p].push_back(static_cast<int>(g));
                fuzzy[p].push_back(static_cast<int>(g));
            } else if (edit_similarity(a, b) >= kNameMatchThreshold) {
                fuzzy[p].push_back(static_cast<int>(g));
            }
        }
    }

    // Exact edges first, then extend to maximum cardinality over all edges.
    Matcher m(fuzzy, np, ng);
    {
        Matcher me(exact, np, ng);
        me.run();
        m.gold_of_pred = me.gold_of_pred;
        m.pred_of_gold = me.pred_of_gold;
    }
    m.run();

    std::vector<MatchedPair> out;
    for (std::size_t p = 0; p < np; ++p)
        if (m.gold_of_pred[p] >= 0)
            out.push_back({static_cast<int>(p), m.gold_of_pred[p]});
    return out;
}

PRF prf_from_counts(const FieldCounts& c) {
    PRF r;
    if (c.tp + c.fp > 0)
        r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0)
        r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (r.precision + r.recall > 0.0)
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

DocScore score_full_parse(const LabTable& pred, const LabTable& gold) {
    DocScore score;
    for (const auto& f : lab_field_names()) score.per_field[f] = {};

    const auto pairs = match_entries(pred, gold);
    std::vector<char> pm(pred.rows.size(), 0), gm(gold.rows.size(), 0);

    auto account = [&](const std::string& field, bool equal) {
        auto& fc = score.per_field[field];
        if (equal) {
            ++fc.tp;
        } else {
            ++fc.fp;
            ++fc.fn;
        }
    };

    for (const auto& pr : pairs) {
        pm[pr.pred_row] = gm[pr.gold_row] = 1;
        const auto& p = pred.rows[pr.pred_row];
        const auto& g = gold.rows[pr.gold_row];
        account("entry_name", p.c_entry == g.c_entry);
        account("result", p.c_result == g.c_result);
        account("reference", p.c_reference == g.c_reference);
        account("unit", p.c_unit == g.c_unit);
    }
    for (std::size_t p = 0; p < pred.rows.size(); ++p)
        if (!pm[p])
            for (const auto& f : lab_field_names()) ++score.per_field[f].fp;
    for (std::size_t g = 0; g < gold.rows.size(); ++g)
        if (!gm[g])
            for (const auto& f : lab_field_names()) ++score.per_field[f].fn;

    for (const auto& [f, c] : score.per_field) {
        score.total.tp += c.tp;
        score.total.fp += c.fp;
        score.total.fn += c.fn;
    }
    score.prf = prf_from_counts(score.total);
    return score;
}

FieldScores aggregate_scores(const std::vector<DocScore>& docs) {
    FieldScores out;
    for (const auto& f : lab_field_names()) out.per_field_counts[f] = {};
    double f1_sum = 0.0;
    for (const auto& d : docs) {
        out.total.tp += d.total.tp;
        out.total.fp += d.total.fp;
        out.total.fn += d.total.fn;
        for (const auto& [f, c] : d.per_field) {
            auto& fc = out.per_field_counts[f];
            fc.tp += c.tp;
            fc.fp += c.fp;
            fc.fn += c.fn;
        }
        f1_sum += d.prf.f1;
    }
    out.micro = prf_from_counts(out.total);
    if (!docs.empty()) out.macro_doc_f1 = f1_sum / static_cast<double>(docs.size());
    for (const auto& [f, c] : out.per_field_counts) out.per_field[f] = prf_from_counts(c);
    return out;
}

int score_simple_qa(const std::string& pred, const std::string& gold,
                    const std::string& judge_command) {
    if (canonicalize(pred, FieldKind::Answer) == canonicalize(gold, FieldKind::Answer))
        return 1;
    if (judge_command.empty()) return 0;
    nlohmann::json payload;
    payload["pred"] = pred;
    payload["gold"] = gold;
    const double s = invoke_judge(judge_command, payload.dump());
    return s >= 0.5 ? 1 : 0;
}

DocScore score_complex_qa(const ComplexItem& pred, const ComplexItem& gold) {
    DocScore score;
    auto account = [&](const std::string& field, bool equal) {
        auto& fc = score.per_field[field];
        if (equal) {
            ++fc.tp;
        } else {
            ++fc.fp;
            ++fc.fn;
        }
    };
    account("result", canonicalize_result(pred.result).text ==
                          canonicalize_result(gold.result).text);
    account("reference", canonicalize(pred.reference, FieldKind::Reference) ==
                             canonicalize(gold.reference, FieldKind::Reference));
    account("abnormal", abnormality_from_string(pred.abnormal) ==
                            abnormality_from_string(gold.abnormal));
    for (const auto& [f, c] : score.per_field) {
        score.total.tp += c.tp;
        score.total.fp += c.fp;
        score.total.fn += c.fn;
    }
    score.prf = prf_from_counts(score.total);
    return score;
}

ConsensusBucket consensus_bucket(bool agree_before, bool agree_after) {
    if (agree_before) return ConsensusBucket::Easy;
    if (agree_after) return ConsensusBucket::Hard;
    return ConsensusBucket::Discard;
}

const char* to_string(ConsensusBucket b) {
    switch (b) {
        case ConsensusBucket::Easy: return "Easy";
        case ConsensusBucket::Hard: return "Hard";
        default: return "Discard";
    }
}

}  // namespace medpipe
