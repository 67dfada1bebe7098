#include "medpipe/maskops.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <tuple>

#include "medpipe/error.hpp"

namespace medpipe {

namespace {

void require_mask(const Mask2D& m) {
    if (m.height <= 0 || m.width <= 0)
        throw Error("bad_mask", "mask dimensions must be positive");
    if (m.data.size() !=
        static_cast<std::size_t>(m.height) * static_cast<std::size_t>(m.width))
        throw Error("bad_mask", "mask buffer does not match height*width");
    for (auto v : m.data)
        if (v > 1) throw Error("non_binary_mask", "mask values must be 0 or 1");
}

void require_pair(const ProbMaskPair& x) {
    if (x.p.size() != x.g.size())
        throw Error("length_mismatch", "p and g must have equal length");
    if (x.p.empty())
        throw Error("length_mismatch", "inputs must be non-empty");
}

double clip01(double v) {
    return std::min(1.0 - kLogClip, std::max(kLogClip, v));
}

long long box_area(const LabeledBox& b) {
    return static_cast<long long>(b.x_max - b.x_min + 1) *
           static_cast<long long>(b.y_max - b.y_min + 1);
}

}  // namespace

RleMask rle_encode(const Mask2D& mask) {
    require_mask(mask);
    RleMask out;
    out.height = mask.height;
    out.width = mask.width;
    std::uint8_t cur = 0;
    std::int64_t run = 0;
    for (int c = 0; c < mask.width; ++c) {
        for (int r = 0; r < mask.height; ++r) {
            const std::uint8_t v = mask.at(r, c);
            if (v == cur) {
                ++run;
            } else {
                out.counts.push_back(run);
                cur = v;
                run = 1;
            }
        }
    }
    out.counts.push_back(run);
    return out;
}

Mask2D rle_decode(const RleMask& rle) {
    if (rle.height <= 0 || rle.width <= 0)
        throw Error("bad_mask", "rle dimensions must be positive");
    const std::int64_t total =
        static_cast<std::int64_t>(rle.height) * rle.width;
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < rle.counts.size(); ++i) {
        const std::int64_t c = rle.counts[i];
        if (c < 0) throw Error("rle_invalid", "negative run length");
        if (c == 0 && i != 0)
            throw Error("rle_invalid", "zero run length after the first count");
        sum += c;
    }
    if (sum != total)
        throw Error("rle_counts_mismatch", "run lengths do not sum to height*width");

    Mask2D m(rle.height, rle.width);
    std::int64_t pos = 0;
    std::uint8_t cur = 0;
    for (const std::int64_t c : rle.counts) {
        if (cur == 1) {
            for (std::int64_t k = 0; k < c; ++k) {
                const std::int64_t idx = pos + k;
                const int col = static_cast<int>(idx / rle.height);
                const int row = static_cast<int>(idx % rle.height);
                m.at(row, col) = 1;
            }
        }
        pos += c;
        cur = 1 - cur;
    }
    return m;
}

double dice_loss(const ProbMaskPair& x) {
    require_pair(x);
    double inter = 0.0, sp = 0.0, sg = 0.0;
    for (std::size_t i = 0; i < x.p.size(); ++i) {
        inter += x.p[i] * x.g[i];
        sp += x.p[i];
        sg += x.g[i];
    }
    const double denom = sp + sg + x.epsilon;
    if (denom == 0.0) return 1.0;
    return 1.0 - 2.0 * inter / denom;
}

std::vector<double> dice_loss_grad(const ProbMaskPair& x) {
    require_pair(x);
    double inter = 0.0, sp = 0.0, sg = 0.0;
    for (std::size_t i = 0; i < x.p.size(); ++i) {
        inter += x.p[i] * x.g[i];
        sp += x.p[i];
        sg += x.g[i];
    }
    const double denom = sp + sg + x.epsilon;
    std::vector<double> grad(x.p.size(), 0.0);
    if (denom == 0.0) return grad;
    for (std::size_t i = 0; i < x.p.size(); ++i)
        grad[i] = -2.0 * (x.g[i] * denom - inter) / (denom * denom);
    return grad;
}

double bce_loss(const ProbMaskPair& x) {
    require_pair(x);
    double s = 0.0;
    for (std::size_t i = 0; i < x.p.size(); ++i) {
        const double p = clip01(x.p[i]);
        s += x.g[i] * std::log(p) + (1.0 - x.g[i]) * std::log(1.0 - p);
    }
    return -s / static_cast<double>(x.p.size());
}

std::vector<double> bce_loss_grad(const ProbMaskPair& x) {
    require_pair(x);
    const double n = static_cast<double>(x.p.size());
    std::vector<double> grad(x.p.size(), 0.0);
    for (std::size_t i = 0; i < x.p.size(); ++i) {
        const double p = x.p[i];
        if (p <= kLogClip || p >= 1.0 - kLogClip) continue;  // clipped: flat
        grad[i] = -(x.g[i] / p - (1.0 - x.g[i]) / (1.0 - p)) / n;
    }
    return grad;
}

double token_cross_entropy(const TokenDistribution& d) {
    if (d.true_labels.size() != d.predicted.size())
        throw Error("bad_distribution", "one true label required per position");
    double s = 0.0;
    for (std::size_t i = 0; i < d.predicted.size(); ++i) {
        const auto& row = d.predicted[i];
        if (row.empty())
            throw Error("bad_distribution", "empty probability row");
        double sum = 0.0;
        for (const double v : row) {
            if (v < 0.0) throw Error("bad_distribution", "negative probability");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw Error("bad_distribution", "probability row does not sum to 1");
        const int label = d.true_labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= row.size())
            throw Error("bad_distribution", "true label out of range");
        s -= std::log(std::max(row[label], kLogClip));
    }
    return s;
}

double seg_loss(double token, double dice, double bce, const LossWeights& w) {
    return w.lambda1 * token + w.lambda2 * dice + w.lambda3 * bce;
}

double box_iou(const LabeledBox& a, const LabeledBox& b) {
    const long long ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min) + 1;
    const long long iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min) + 1;
    const long long inter = (ix > 0 && iy > 0) ? ix * iy : 0;
    const long long uni = box_area(a) + box_area(b) - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double precision_at_iou(const std::vector<LabeledBox>& pred,
                        const std::vector<LabeledBox>& gold, double thresh) {
    if (!(thresh > 0.0 && thresh <= 1.0))
        throw Error("bad_argument", "iou threshold must be in (0, 1]");
    if (pred.empty()) return 0.0;

    struct Cand {
        double iou;
        int pi;
        int gi;
    };
    std::vector<Cand> cands;
    for (int pi = 0; pi < static_cast<int>(pred.size()); ++pi) {
        for (int gi = 0; gi < static_cast<int>(gold.size()); ++gi) {
            if (pred[pi].class_id != gold[gi].class_id) continue;
            const double iou = box_iou(pred[pi], gold[gi]);
            if (iou >= thresh) cands.push_back({iou, pi, gi});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        return std::tie(b.iou, a.pi, a.gi) < std::tie(a.iou, b.pi, b.gi);
    });

    std::vector<char> pud(pred.size(), 0), gud(gold.size(), 0);
    long long matched = 0;
    for (const auto& c : cands) {
        if (pud[c.pi] || gud[c.gi]) continue;
        pud[c.pi] = gud[c.gi] = 1;
        ++matched;
    }
    return static_cast<double>(matched) / static_cast<double>(pred.size());
}

double dice_coefficient(const Mask2D& a, const Mask2D& b) {
    require_mask(a);
    require_mask(b);
    if (a.height != b.height || a.width != b.width)
        throw Error("shape_mismatch", "masks must have equal shape");
    long long inter = 0, ca = 0, cb = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        inter += a.data[i] & b.data[i];
        ca += a.data[i];
        cb += b.data[i];
    }
    if (ca + cb == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(ca + cb);
}

}  // namespace medpipe
