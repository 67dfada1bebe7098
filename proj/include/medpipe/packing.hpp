#pragma once

#include <string>
#include <vector>

namespace medpipe {

// One training sample as a token sequence. seg_positions are the offsets of
// segmentation trigger tokens; mask_refs pair with them one-to-one.
struct TokenSample {
    std::string id;
    long long length = 0;
    std::vector<long long> seg_positions;
    std::vector<std::string> mask_refs;
};

// Half-open token range [start, end) of one sample.
struct Chunk {
    std::string sample_id;
    int chunk_index = 0;
    long long start = 0;
    long long end = 0;

    long long length() const { return end - start; }
    bool operator==(const Chunk&) const = default;
};

// One segmentation trigger inside a packed bin. seg_slot orders triggers
// within the bin by packed token position; image_slot is the index into the
// per-bin stack of image/mask tensors and equals seg_slot by construction.
struct SegSlot {
    int bin = 0;
    int seg_slot = 0;
    int image_slot = 0;
    std::string mask_ref;
    std::string sample_id;
    long long token_offset = 0;

    bool operator==(const SegSlot&) const = default;
};

struct PackPlan {
    long long max_len = 0;
    std::vector<std::vector<Chunk>> bins;
    std::vector<SegSlot> index_table;
};

struct PackStats {
    std::size_t bins = 0;
    long long total_tokens = 0;
    double fill_ratio = 0.0;
};

// Greedy maximal chunking: every chunk except possibly the last has length
// max_len; chunks tile [0, length) in order. No tokens are dropped.
std::vector<Chunk> split_into_chunks(const TokenSample& s, long long max_len);

// Best-fit-decreasing. Chunks are sorted by length descending with ties
// broken by sample_id then chunk_index; each is placed into the bin with the
// smallest remaining capacity that still fits, ties to the lowest bin index.
PackPlan best_fit_pack(std::vector<Chunk> chunks, long long max_len);

// Populates plan.index_table from the samples' seg positions.
void build_index_table(PackPlan& plan, const std::vector<TokenSample>& samples);

PackStats utilization(const PackPlan& plan);

// split_into_chunks + best_fit_pack + build_index_table over a corpus.
PackPlan pack_samples(const std::vector<TokenSample>& samples, long long max_len);

}  // namespace medpipe
