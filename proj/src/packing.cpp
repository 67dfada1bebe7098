#include "medpipe/packing.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "medpipe/error.hpp"

namespace medpipe {

namespace {

void require_sample(const TokenSample& s) {
    if (s.id.empty()) throw Error("bad_sample", "sample id must be non-empty");
    if (s.length <= 0)
        throw Error("bad_sample", "sample '" + s.id + "' has non-positive length");
    if (s.seg_positions.size() != s.mask_refs.size())
        throw Error("bad_sample",
                    "sample '" + s.id + "' needs one mask_ref per seg position");
    long long prev = -1;
    for (const long long p : s.seg_positions) {
        if (p <= prev)
            throw Error("bad_sample",
                        "sample '" + s.id + "' seg positions must be strictly increasing");
        if (p < 0 || p >= s.length)
            throw Error("bad_sample",
                        "sample '" + s.id + "' seg position out of range");
        prev = p;
    }
}

void require_max_len(long long max_len) {
    if (max_len < 1) throw Error("bad_max_len", "max_len must be >= 1");
}

}  // namespace

std::vector<Chunk> split_into_chunks(const TokenSample& s, long long max_len) {
    require_max_len(max_len);
    require_sample(s);
    std::vector<Chunk> out;
    int idx = 0;
    for (long long start = 0; start < s.length; start += max_len)
        out.push_back({s.id, idx++, start, std::min(s.length, start + max_len)});
    return out;
}

PackPlan best_fit_pack(std::vector<Chunk> chunks, long long max_len) {
    require_max_len(max_len);
    for (const auto& c : chunks) {
        if (c.length() <= 0)
            throw Error("bad_chunk", "chunk of '" + c.sample_id + "' has non-positive length");
        if (c.length() > max_len)
            throw Error("chunk_too_long",
                        "chunk of '" + c.sample_id + "' exceeds max_len");
    }

    std::sort(chunks.begin(), chunks.end(), [](const Chunk& a, const Chunk& b) {
        if (a.length() != b.length()) return a.length() > b.length();
        if (a.sample_id != b.sample_id) return a.sample_id < b.sample_id;
        return a.chunk_index < b.chunk_index;
    });

    PackPlan plan;
    plan.max_len = max_len;
    std::vector<long long> totals;
    for (const auto& c : chunks) {
        int best = -1;
        long long best_rem = max_len + 1;
        for (std::size_t b = 0; b < totals.size(); ++b) {
            const long long rem = max_len - totals[b];
            if (rem >= c.length() && rem < best_rem) {
                best_rem = rem;
                best = static_cast<int>(b);
            }
        }
        if (best < 0) {
            plan.bins.emplace_back();
            totals.push_back(0);
            best = static_cast<int>(totals.size()) - 1;
        }
        plan.bins[best].push_back(c);
        totals[best] += c.length();
    }
    return plan;
}

void build_index_table(PackPlan& plan, const std::vector<TokenSample>& samples) {
    struct Located {
        Chunk chunk;
        int bin;
        long long packed_start;
    };
    std::map<std::string, std::vector<Located>> by_sample;
    for (std::size_t b = 0; b < plan.bins.size(); ++b) {
        long long off = 0;
        for (const auto& c : plan.bins[b]) {
            by_sample[c.sample_id].push_back({c, static_cast<int>(b), off});
            off += c.length();
        }
    }

    struct Pending {
        long long packed_pos;
        std::string mask_ref;
        std::string sample_id;
        long long token_offset;
    };
    std::vector<std::vector<Pending>> per_bin(plan.bins.size());

    std::set<std::string> seen;
    for (const auto& s : samples) {
        require_sample(s);
        if (!seen.insert(s.id).second)
            throw Error("bad_sample", "duplicate sample id '" + s.id + "'");
        if (s.seg_positions.empty()) continue;
        const auto it = by_sample.find(s.id);
        for (std::size_t k = 0; k < s.seg_positions.size(); ++k) {
            const long long pos = s.seg_positions[k];
            const Located* home = nullptr;
            if (it != by_sample.end()) {
                for (const auto& loc : it->second) {
                    if (loc.chunk.start <= pos && pos < loc.chunk.end) {
                        home = &loc;
                        break;
                    }
                }
            }
            if (home == nullptr)
                throw Error("orphaned_seg",
                            "sample '" + s.id + "' seg position " +
                                std::to_string(pos) + " is not covered by any packed chunk");
            per_bin[home->bin].push_back({home->packed_start + (pos - home->chunk.start),
                                          s.mask_refs[k], s.id, pos});
        }
    }

    plan.index_table.clear();
    for (std::size_t b = 0; b < per_bin.size(); ++b) {
        auto& entries = per_bin[b];
        std::sort(entries.begin(), entries.end(),
                  [](const Pending& a, const Pending& c) {
                      return a.packed_pos < c.packed_pos;
                  });
        for (std::size_t k = 0; k < entries.size(); ++k)
            plan.index_table.push_back({static_cast<int>(b), static_cast<int>(k),
                                        static_cast<int>(k), entries[k].mask_ref,
                                        entries[k].sample_id, entries[k].token_offset});
    }
}

PackStats utilization(const PackPlan& plan) {
    PackStats st;
    st.bins = plan.bins.size();
    for (const auto& bin : plan.bins)
        for (const auto& c : bin) st.total_tokens += c.length();
    if (st.bins > 0 && plan.max_len > 0)
        st.fill_ratio = static_cast<double>(st.total_tokens) /
                        static_cast<double>(static_cast<long long>(st.bins) * plan.max_len);
    return st;
}

PackPlan pack_samples(const std::vector<TokenSample>& samples, long long max_len) {
    require_max_len(max_len);
    std::vector<Chunk> chunks;
    std::set<std::string> seen;
    for (const auto& s : samples) {
        require_sample(s);
        if (!seen.insert(s.id).second)
            throw Error("bad_sample", "duplicate sample id '" + s.id + "'");
        const auto cs = split_into_chunks(s, max_len);
        chunks.insert(chunks.end(), cs.begin(), cs.end());
    }
    PackPlan plan = best_fit_pack(std::move(chunks), max_len);
    build_index_table(plan, samples);
    return plan;
}

}  // namespace medpipe
