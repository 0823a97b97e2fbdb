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

#include "seasoncorr/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_set>

namespace seasoncorr {

namespace {

void check_grid(const FeatureMap& map, const char* name) {
    if (map.width <= 0 || map.height <= 0 || map.channels <= 0 || map.stride < 1 ||
        map.values.size() != static_cast<size_t>(map.width) * map.height * map.channels) {
        throw std::invalid_argument(std::string(name) + ": inconsistent feature map layout");
    }
}

// softmax of `logits` into `out`; returns the max-shifted normalizer path
void softmax(const double* logits, int n, double* out) {
    double max_logit = logits[0];
    for (int c = 1; c < n; ++c) max_logit = std::max(max_logit, logits[c]);
    double sum = 0.0;
    for (int c = 0; c < n; ++c) {
        out[c] = std::exp(logits[c] - max_logit);
        sum += out[c];
    }
    for (int c = 0; c < n; ++c) out[c] /= sum;
}

int argmax_lowest(const double* values, int n) {
    int best = 0;
    for (int c = 1; c < n; ++c) {
        if (values[c] > values[best]) best = c;
    }
    return best;
}

}  // namespace

FeatureMap FeatureMap::zeros(int width, int height, int channels, int stride, FeatureKind kind) {
    FeatureMap map;
    map.width = width;
    map.height = height;
    map.channels = channels;
    map.stride = stride;
    map.kind = kind;
    map.values.assign(static_cast<size_t>(width) * height * channels, 0.0);
    return map;
}

FeatureMap FeatureMap::zeros_like(const FeatureMap& other) {
    return zeros(other.width, other.height, other.channels, other.stride, other.kind);
}

void CorrLossConfig::validate() const {
    if (!(margin >= -1.0 && margin <= 1.0)) {
        throw std::invalid_argument("CorrLossConfig: margin must be in [-1, 1]");
    }
    if (!(lambda >= 0.0)) {
        throw std::invalid_argument("CorrLossConfig: lambda must be nonnegative");
    }
    if (warmup_iters < 0) {
        throw std::invalid_argument("CorrLossConfig: warmup_iters must be nonnegative");
    }
}

CorrHingeResult hinge_corr_loss(const FeatureMap& ref, const FeatureMap& tgt,
                                const CorrespondenceSample& sample, double margin,
                                double epsilon_norm) {
    check_grid(ref, "hinge_corr_loss(ref)");
    check_grid(tgt, "hinge_corr_loss(tgt)");
    if (ref.channels != tgt.channels) {
        throw std::invalid_argument("hinge_corr_loss: channel count mismatch");
    }
    const int n = static_cast<int>(sample.size());
    if (n == 0) {
        throw std::invalid_argument("hinge_corr_loss: sample has no correspondences");
    }

    const int f = ref.channels;
    const double inv_n = 1.0 / n;

    struct PairStats {
        int rx, ry, tx, ty;
        double norm_ref, norm_tgt, cosine;
        bool active;     // hinge branch, also false for the zero-norm guard
        double term;
    };
    std::vector<PairStats> stats(sample.size());

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        PairStats& s = stats[i];
        s.rx = ref.cell_x(sample.x_ref[i].u);
        s.ry = ref.cell_y(sample.x_ref[i].v);
        s.tx = tgt.cell_x(sample.x_tgt[i].u);
        s.ty = tgt.cell_y(sample.x_tgt[i].v);
        const double* dr = ref.at(s.rx, s.ry);
        const double* dt = tgt.at(s.tx, s.ty);
        double dot = 0.0, sq_r = 0.0, sq_t = 0.0;
        for (int c = 0; c < f; ++c) {
            dot += dr[c] * dt[c];
            sq_r += dr[c] * dr[c];
            sq_t += dt[c] * dt[c];
        }
        s.norm_ref = std::sqrt(sq_r);
        s.norm_tgt = std::sqrt(sq_t);
        if (s.norm_ref < epsilon_norm || s.norm_tgt < epsilon_norm) {
            s.cosine = 0.0;
            s.active = false;
            s.term = std::max(0.0, margin);
            return;
        }
        s.cosine = dot / (s.norm_ref * s.norm_tgt);
        s.active = s.cosine < margin;
        s.term = s.active ? margin - s.cosine : 0.0;
    }

    CorrHingeResult result;
    result.grad_ref = FeatureMap::zeros_like(ref);
    result.grad_tgt = FeatureMap::zeros_like(tgt);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        loss += stats[i].term;  // fixed order, bit-reproducible
        if (!stats[i].active) continue;
        const PairStats& s = stats[i];
        const double* dr = ref.at(s.rx, s.ry);
        const double* dt = tgt.at(s.tx, s.ty);
        double* gr = result.grad_ref.at(s.rx, s.ry);
        double* gt = result.grad_tgt.at(s.tx, s.ty);
        const double inv_prod = 1.0 / (s.norm_ref * s.norm_tgt);
        const double cos_over_sq_r = s.cosine / (s.norm_ref * s.norm_ref);
        const double cos_over_sq_t = s.cosine / (s.norm_tgt * s.norm_tgt);
        // d/dx max(0, m - cos) = -(d cos / dx) on the active branch
        for (int c = 0; c < f; ++c) {
            gr[c] += inv_n * (cos_over_sq_r * dr[c] - inv_prod * dt[c]);
            gt[c] += inv_n * (cos_over_sq_t * dt[c] - inv_prod * dr[c]);
        }
    }
    result.loss = loss * inv_n;
    return result;
}

CorrCeResult ce_corr_loss(const FeatureMap& ref_logits, const FeatureMap& tgt_logits,
                          const CorrespondenceSample& sample, double epsilon_log) {
    check_grid(ref_logits, "ce_corr_loss(ref)");
    check_grid(tgt_logits, "ce_corr_loss(tgt)");
    if (ref_logits.channels != tgt_logits.channels) {
        throw std::invalid_argument("ce_corr_loss: class count mismatch");
    }
    const int n = static_cast<int>(sample.size());
    if (n == 0) {
        throw std::invalid_argument("ce_corr_loss: sample has no correspondences");
    }

    const int f = ref_logits.channels;
    const double inv_n = 1.0 / n;

    std::vector<double> terms(sample.size());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const double* dr =
            ref_logits.at(ref_logits.cell_x(sample.x_ref[i].u), ref_logits.cell_y(sample.x_ref[i].v));
        const double* dt =
            tgt_logits.at(tgt_logits.cell_x(sample.x_tgt[i].u), tgt_logits.cell_y(sample.x_tgt[i].v));
        const int label = argmax_lowest(dr, f);
        std::vector<double> prob(f);
        softmax(dt, f, prob.data());
        terms[i] = -std::log(std::max(prob[label], epsilon_log));
    }

    CorrCeResult result;
    result.grad_tgt = FeatureMap::zeros_like(tgt_logits);
    double loss = 0.0;
    std::vector<double> prob(f);
    for (int i = 0; i < n; ++i) {
        loss += terms[i];
        const double* dr =
            ref_logits.at(ref_logits.cell_x(sample.x_ref[i].u), ref_logits.cell_y(sample.x_ref[i].v));
        const int tx = tgt_logits.cell_x(sample.x_tgt[i].u);
        const int ty = tgt_logits.cell_y(sample.x_tgt[i].v);
        const int label = argmax_lowest(dr, f);
        softmax(tgt_logits.at(tx, ty), f, prob.data());
        if (prob[label] < epsilon_log) continue;  // clamped: locally constant
        double* gt = result.grad_tgt.at(tx, ty);
        for (int c = 0; c < f; ++c) {
            gt[c] += inv_n * (prob[c] - (c == label ? 1.0 : 0.0));
        }
    }
    result.loss = loss * inv_n;
    return result;
}

SupervisedCeResult supervised_ce_loss(const FeatureMap& logits, const ClassMap& labels,
                                      int ignore_label, double epsilon_log) {
    check_grid(logits, "supervised_ce_loss");
    if (labels.width != logits.width || labels.height != logits.height ||
        labels.classes.size() != static_cast<size_t>(labels.width) * labels.height) {
        throw std::invalid_argument("supervised_ce_loss: label grid does not match logits grid");
    }

    const int f = logits.channels;
    int64_t active = 0;
    for (int label : labels.classes) {
        if (label == ignore_label) continue;
        if (label < 0 || label >= f) {
            throw std::invalid_argument("supervised_ce_loss: label index out of range");
        }
        ++active;
    }

    SupervisedCeResult result;
    result.grad = FeatureMap::zeros_like(logits);
    if (active == 0) {
        return result;  // defined as loss 0, zero gradient
    }
    const double inv_m = 1.0 / static_cast<double>(active);
    const int cells = logits.width * logits.height;
    std::vector<double> terms(static_cast<size_t>(cells), 0.0);

#pragma omp parallel for schedule(static)
    for (int cell = 0; cell < cells; ++cell) {
        const int x = cell % logits.width;
        const int y = cell / logits.width;
        const int label = labels.at(x, y);
        if (label == ignore_label) continue;
        std::vector<double> prob(f);
        softmax(logits.at(x, y), f, prob.data());
        terms[cell] = -std::log(std::max(prob[label], epsilon_log));
        if (prob[label] < epsilon_log) continue;
        double* g = result.grad.at(x, y);  // cell-exclusive write
        for (int c = 0; c < f; ++c) {
            g[c] = inv_m * (prob[c] - (c == label ? 1.0 : 0.0));
        }
    }

    double loss = 0.0;
    for (int cell = 0; cell < cells; ++cell) loss += terms[cell];
    result.loss = loss * inv_m;
    return result;
}

double total_loss(double l_sup, double l_corr, double lambda) {
    if (!(lambda >= 0.0)) {
        throw std::invalid_argument("total_loss: lambda must be nonnegative");
    }
    return (l_sup + lambda * l_corr) / (1.0 + lambda);
}

CorrespondenceSample filter_nonstationary(const CorrespondenceSample& sample,
                                          const ClassMap& ref_pred,
                                          const std::vector<int>& forbidden) {
    const std::unordered_set<int> forbidden_set(forbidden.begin(), forbidden.end());
    CorrespondenceSample filtered = sample;
    filtered.x_ref.clear();
    filtered.x_tgt.clear();
    for (size_t i = 0; i < sample.size(); ++i) {
        const int cls = ref_pred.at(ref_pred.cell_x(sample.x_ref[i].u),
                                    ref_pred.cell_y(sample.x_ref[i].v));
        if (forbidden_set.count(cls)) continue;
        filtered.x_ref.push_back(sample.x_ref[i]);
        filtered.x_tgt.push_back(sample.x_tgt[i]);
    }
    return filtered;
}

double warmup_gate(int64_t iteration, const CorrLossConfig& cfg) {
    if (iteration < 0) {
        throw std::invalid_argument("warmup_gate: iteration must be nonnegative");
    }
    return iteration < cfg.warmup_iters ? 0.0 : cfg.lambda;
}

double mean_iou(const std::vector<int64_t>& confusion, int num_classes,
                const std::vector<int>& present) {
    if (num_classes <= 0 ||
        confusion.size() != static_cast<size_t>(num_classes) * num_classes) {
        throw std::invalid_argument("mean_iou: confusion matrix must be C x C");
    }
    if (present.empty()) {
        throw std::invalid_argument("mean_iou: present class set must not be empty");
    }
    for (int64_t v : confusion) {
        if (v < 0) throw std::invalid_argument("mean_iou: negative confusion count");
    }

    double sum = 0.0;
    for (int cls : present) {
        if (cls < 0 || cls >= num_classes) {
            throw std::invalid_argument("mean_iou: present class out of range");
        }
        int64_t row = 0, col = 0;
        for (int k = 0; k < num_classes; ++k) {
            row += confusion[static_cast<size_t>(cls) * num_classes + k];
            col += confusion[static_cast<size_t>(k) * num_classes + cls];
        }
        const int64_t tp = confusion[static_cast<size_t>(cls) * num_classes + cls];
        const int64_t denom = row + col - tp;
        sum += denom > 0 ? static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
    }
    return sum / static_cast<double>(present.size());
}

double margin_angle_degrees(double margin) {
    const double clamped = std::clamp(margin, -1.0, 1.0);
    return std::acos(clamped) * 180.0 / std::numbers::pi;
}

}  // namespace seasoncorr
