// This file is part of the seasoncorr toolkit.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "seasoncorr/dataset_io.hpp"

#include <cstdint>
#include <vector>

namespace seasoncorr {

enum class FeatureKind { kLogits, kProbabilities, kFeatures };

/// Dense per-pixel feature grid of depth `channels`, row-major H x W x F.
/// `stride` maps image pixels to grid cells; the lookup for a continuous
/// pixel coordinate is floor((coord + 0.5) / stride), clamped.
struct FeatureMap {
    int width = 0;
    int height = 0;
    int channels = 0;
    int stride = 1;
    FeatureKind kind = FeatureKind::kFeatures;
    std::vector<double> values;

    static FeatureMap zeros(int width, int height, int channels, int stride = 1,
                            FeatureKind kind = FeatureKind::kFeatures);
    static FeatureMap zeros_like(const FeatureMap& other);

    double* at(int x, int y) { return values.data() + (static_cast<size_t>(y) * width + x) * channels; }
    const double* at(int x, int y) const {
        return values.data() + (static_cast<size_t>(y) * width + x) * channels;
    }
    /// Grid cell of a continuous pixel coordinate (x axis).
    int cell_x(double u) const { return feature_cell(u, stride, width); }
    int cell_y(double v) const { return feature_cell(v, stride, height); }
};

/// Per-pixel class indices on the same grid/stride layout as a FeatureMap.
struct ClassMap {
    int width = 0;
    int height = 0;
    int stride = 1;
    std::vector<int> classes;

    int at(int x, int y) const { return classes[static_cast<size_t>(y) * width + x]; }
    int cell_x(double u) const { return feature_cell(u, stride, width); }
    int cell_y(double v) const { return feature_cell(v, stride, height); }
};

// Cityscapes 19-class train ids for the movable-object classes.
inline const std::vector<int> kDefaultNonstationaryClasses = {11, 12, 13, 14, 15, 16, 17, 18};

inline constexpr double kDefaultMargin = 0.8;
inline constexpr double kDefaultLambda = 1.0;             // CE and final-layer hinge
inline constexpr double kIntermediateHingeLambda = 0.1;   // second-to-final-layer hinge
inline constexpr int kDefaultWarmupIters = 500;

struct CorrLossConfig {
    double margin = kDefaultMargin;
    double lambda = kDefaultLambda;
    int warmup_iters = kDefaultWarmupIters;
    std::vector<int> nonstationary_classes = kDefaultNonstationaryClasses;
    double epsilon_norm = 1e-12;
    double epsilon_log = 1e-12;

    /// Throws std::invalid_argument when margin is outside [-1, 1] or
    /// lambda is negative.
    void validate() const;
};

struct CorrHingeResult {
    double loss = 0.0;
    FeatureMap grad_ref;
    FeatureMap grad_tgt;
};

/// Mean hinge on the cosine between matched feature vectors,
/// (1/N) sum max(0, m - cos(d_ref, d_tgt)), with exact gradients for both
/// maps. Zero-norm vectors contribute the (clamped) margin with zero
/// gradient; the kink at cos == m takes the inactive branch.
/// Throws std::invalid_argument on channel mismatch or N == 0.
CorrHingeResult hinge_corr_loss(const FeatureMap& ref, const FeatureMap& tgt,
                                const CorrespondenceSample& sample, double margin = kDefaultMargin,
                                double epsilon_norm = 1e-12);

struct CorrCeResult {
    double loss = 0.0;
    FeatureMap grad_tgt;
};

/// Cross-entropy between the one-hot argmax of the reference logits and the
/// softmax of the target logits at matched pixels. Argmax ties go to the
/// lowest class index and the reference side gets no gradient.
CorrCeResult ce_corr_loss(const FeatureMap& ref_logits, const FeatureMap& tgt_logits,
                          const CorrespondenceSample& sample, double epsilon_log = 1e-12);

struct SupervisedCeResult {
    double loss = 0.0;
    FeatureMap grad;
};

/// Mean softmax cross-entropy over non-ignored label cells; all-ignored
/// input yields loss 0 with a zero gradient.
SupervisedCeResult supervised_ce_loss(const FeatureMap& logits, const ClassMap& labels,
                                      int ignore_label = 255, double epsilon_log = 1e-12);

/// (l_sup + lambda * l_corr) / (1 + lambda); the rescaling keeps the total
/// loss weight at unity.
double total_loss(double l_sup, double l_corr, double lambda);

/// Drops pairs whose reference-image pixel is predicted as a forbidden
/// (non-stationary) class. Order preserved; idempotent.
CorrespondenceSample filter_nonstationary(const CorrespondenceSample& sample,
                                          const ClassMap& ref_pred,
                                          const std::vector<int>& forbidden =
                                              kDefaultNonstationaryClasses);

/// Effective correspondence weight: 0 during the warm-up period, the
/// configured lambda afterwards.
double warmup_gate(int64_t iteration, const CorrLossConfig& cfg);

/// Mean IoU over the `present` classes of a C x C confusion matrix
/// (row = true class, column = predicted class, row-major). Classes with an
/// empty denominator count as IoU 0. Throws on an empty `present` set.
double mean_iou(const std::vector<int64_t>& confusion, int num_classes,
                const std::vector<int>& present);

/// Margin geometry diagnostic: the activation boundary angle acos(m) in
/// degrees (36.8699 for the default margin).
double margin_angle_degrees(double margin);

}  // namespace seasoncorr
