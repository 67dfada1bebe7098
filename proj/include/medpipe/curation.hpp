#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medpipe/box.hpp"
#include "medpipe/validation.hpp"

namespace medpipe {

struct TextRecord {
    std::string id;
    std::string text;
    long long token_count = 0;  // computed by the caller's tokenizer
};

struct ImageMeta {
    std::string id;
    int width = 0;
    int height = 0;
    std::string content_hash;
};

// Keep window for text length and the minimum image area, both inclusive.
inline constexpr long long kMinTokens = 10;
inline constexpr long long kMaxTokens = 1024;
inline constexpr long long kMinImagePixels = 4096;

struct FilterDecision {
    bool keep = false;
    std::string reason;  // empty when kept

    bool operator==(const FilterDecision&) const = default;
};

FilterDecision filter_text(const TextRecord& r);
FilterDecision filter_image(const ImageMeta& m);

// 64-bit FNV-1a over raw bytes; the dedup content hash.
std::uint64_t fnv1a64(std::string_view bytes);

struct DedupRecord {
    std::string id;
    std::uint64_t text_hash = 0;
    std::optional<std::uint64_t> image_hash;
};

struct DedupResult {
    std::vector<std::string> kept;
    std::vector<std::string> dropped;
};

// Exact-hash dedup, first occurrence wins. Text-only records key on
// text_hash; records with an image key on the (text_hash, image_hash) pair.
// The two key spaces are disjoint.
DedupResult dedup(const std::vector<DedupRecord>& records);

struct TagRecord {
    std::string modality;
    std::string task;
    std::string region;
};

const std::vector<std::string>& modality_vocabulary();  // 13 entries
const std::vector<std::string>& task_vocabulary();      // 15 entries
const std::vector<std::string>& region_vocabulary();    // 15 entries

// One failure per out-of-vocabulary field, check_ids modality/task/region.
ValidationReport validate_tags(const TagRecord& t);

struct ThinkStep {
    std::string text;
    std::vector<LabeledBox> boxes;

    bool operator==(const ThinkStep&) const = default;
};

// Grounded chain-of-thought record: ordered reasoning steps, each optionally
// carrying boxes, followed by a final answer.
struct CoTRecord {
    std::vector<ThinkStep> think_steps;
    std::string answer;

    bool operator==(const CoTRecord&) const = default;
};

// Parses "<think> ... </think><answer> ... </answer>". Steps are separated
// by newlines inside the think block; boxes use <bbox>x1,y1,x2,y2</bbox>
// inline markup. Throws Error with codes missing_think, missing_answer,
// malformed_record, empty_think, empty_answer, bbox_malformed,
// degenerate_box.
CoTRecord parse_cot_record(const std::string& text);

std::string serialize_cot_record(const CoTRecord& r);

}  // namespace medpipe
