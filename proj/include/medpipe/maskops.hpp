#pragma once

#include <cstdint>
#include <vector>

#include "medpipe/box.hpp"
#include "medpipe/mask.hpp"

namespace medpipe {

// Uncompressed run-length encoding over a column-major scan of the mask.
// Counts alternate between background (0) and foreground (1) runs and always
// start with a background run; a leading 0 is emitted when the scan starts
// with foreground.
struct RleMask {
    int height = 0;
    int width = 0;
    std::vector<std::int64_t> counts;
};

RleMask rle_encode(const Mask2D& mask);
Mask2D rle_decode(const RleMask& rle);

// Probability map paired with its binary ground truth, flattened.
struct ProbMaskPair {
    std::vector<double> p;
    std::vector<double> g;
    double epsilon = 1e-6;
};

struct LossWeights {
    double lambda1 = 1.0;  // token term
    double lambda2 = 2.0;  // dice term
    double lambda3 = 1.0;  // bce term
};

// Log arguments are clipped to [kLogClip, 1 - kLogClip] before evaluation.
inline constexpr double kLogClip = 1e-7;

double dice_loss(const ProbMaskPair& x);
std::vector<double> dice_loss_grad(const ProbMaskPair& x);
double bce_loss(const ProbMaskPair& x);
std::vector<double> bce_loss_grad(const ProbMaskPair& x);

// Per-position class probabilities plus the true class index per position.
struct TokenDistribution {
    std::vector<int> true_labels;
    std::vector<std::vector<double>> predicted;
};

// Sum over positions of -log p(true label). Not averaged.
double token_cross_entropy(const TokenDistribution& d);

double seg_loss(double token, double dice, double bce, const LossWeights& w = {});

double box_iou(const LabeledBox& a, const LabeledBox& b);

// Fraction of predicted boxes matched one-to-one to a same-class gold box at
// IoU >= thresh, greedily in descending IoU order. Empty predictions score 0.
double precision_at_iou(const std::vector<LabeledBox>& pred,
                        const std::vector<LabeledBox>& gold, double thresh);

// Overlap coefficient of two binary masks; two empty masks score 1.
double dice_coefficient(const Mask2D& a, const Mask2D& b);

}  // namespace medpipe
