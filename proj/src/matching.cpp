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

#include "seasoncorr/matching.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace seasoncorr {

MatchSet mutual_nearest_neighbors(const PointCloud& cloud_ref, const PointCloud& cloud_tgt) {
    if (cloud_ref.positions.empty() || cloud_tgt.positions.empty()) {
        throw std::invalid_argument("mutual_nearest_neighbors: empty cloud");
    }
    const SpatialIndex ref_index = build_spatial_index(cloud_ref);
    const SpatialIndex tgt_index = build_spatial_index(cloud_tgt);

    const int n_ref = static_cast<int>(cloud_ref.positions.size());
    const int n_tgt = static_cast<int>(cloud_tgt.positions.size());
    std::vector<SpatialIndex::Result> nn_in_tgt(n_ref);
    std::vector<int> nn_in_ref(n_tgt);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n_ref; ++i) {
        nn_in_tgt[i] = tgt_index.nearest(cloud_ref.positions[i]);
    }
#pragma omp parallel for schedule(static)
    for (int j = 0; j < n_tgt; ++j) {
        nn_in_ref[j] = ref_index.nearest(cloud_tgt.positions[j]).index;
    }

    MatchSet set;
    set.ref_traversal_id = cloud_ref.traversal_id;
    set.target_traversal_id = cloud_tgt.traversal_id;
    for (int i = 0; i < n_ref; ++i) {
        const int j = nn_in_tgt[i].index;
        if (nn_in_ref[j] == i) {
            set.pairs.push_back({i, j, nn_in_tgt[i].distance});
        }
    }
    return set;
}

std::vector<CameraPairMatches> select_camera_pairs(const MatchSet& matches,
                                                   const PointCloud& cloud_ref,
                                                   const PointCloud& cloud_tgt,
                                                   const std::vector<CameraView>& views,
                                                   int min_common, double max_cam_dist) {
    if (min_common < 1) {
        throw std::invalid_argument("select_camera_pairs: min_common must be >= 1");
    }
    if (!(max_cam_dist > 0.0)) {
        throw std::invalid_argument("select_camera_pairs: max_cam_dist must be positive");
    }

    std::vector<const CameraView*> ref_views;
    std::vector<const CameraView*> tgt_views;
    for (const CameraView& v : views) {
        if (v.traversal_id == matches.ref_traversal_id) ref_views.push_back(&v);
        if (v.traversal_id == matches.target_traversal_id) tgt_views.push_back(&v);
    }
    auto by_id = [](const CameraView* a, const CameraView* b) { return a->view_id < b->view_id; };
    std::sort(ref_views.begin(), ref_views.end(), by_id);
    std::sort(tgt_views.begin(), tgt_views.end(), by_id);

    // per-view lists of match indices whose endpoint is visible there
    auto index_visibility = [](const std::vector<const CameraView*>& vs,
                               const PointCloud& cloud, const MatchSet& set, bool ref_side) {
        std::unordered_map<std::string, int> slot;
        for (size_t k = 0; k < vs.size(); ++k) slot.emplace(vs[k]->view_id, static_cast<int>(k));
        std::vector<std::vector<int>> lists(vs.size());
        for (size_t m = 0; m < set.pairs.size(); ++m) {
            const int point = ref_side ? set.pairs[m].ref_index : set.pairs[m].tgt_index;
            for (const std::string& vid : cloud.visibility[point]) {
                auto it = slot.find(vid);
                if (it != slot.end()) lists[it->second].push_back(static_cast<int>(m));
            }
        }
        return lists;
    };
    const std::vector<std::vector<int>> ref_lists =
        index_visibility(ref_views, cloud_ref, matches, true);
    const std::vector<std::vector<int>> tgt_lists =
        index_visibility(tgt_views, cloud_tgt, matches, false);

    std::vector<Eigen::Vector3d> ref_centers(ref_views.size());
    for (size_t r = 0; r < ref_views.size(); ++r) ref_centers[r] = camera_center(*ref_views[r]);
    std::vector<Eigen::Vector3d> tgt_centers(tgt_views.size());
    for (size_t t = 0; t < tgt_views.size(); ++t) tgt_centers[t] = camera_center(*tgt_views[t]);

    const int n_ref_views = static_cast<int>(ref_views.size());
    std::vector<std::vector<CameraPairMatches>> per_ref(ref_views.size());
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < n_ref_views; ++r) {
        for (size_t t = 0; t < tgt_views.size(); ++t) {
            const double cam_dist = (ref_centers[r] - tgt_centers[t]).norm();
            if (!(cam_dist < max_cam_dist)) continue;
            std::vector<int> common;
            std::set_intersection(ref_lists[r].begin(), ref_lists[r].end(),
                                  tgt_lists[t].begin(), tgt_lists[t].end(),
                                  std::back_inserter(common));
            if (static_cast<int>(common.size()) < min_common) continue;
            per_ref[r].push_back({ref_views[r]->view_id, tgt_views[t]->view_id, cam_dist,
                                  std::move(common)});
        }
    }

    std::vector<CameraPairMatches> result;
    for (auto& group : per_ref) {
        for (auto& pair : group) result.push_back(std::move(pair));
    }
    return result;
}

CameraPairMatches prune_matches(const CameraPairMatches& pair, const MatchSet& matches,
                                const PointCloud& cloud_ref, const PointCloud& cloud_tgt,
                                const CameraView& ref_view, double kappa) {
    if (!(kappa > 0.0)) {
        throw std::invalid_argument("prune_matches: kappa must be positive");
    }
    const Eigen::Vector3d center = camera_center(ref_view);
    CameraPairMatches pruned;
    pruned.ref_view_id = pair.ref_view_id;
    pruned.target_view_id = pair.target_view_id;
    pruned.camera_distance = pair.camera_distance;
    for (int m : pair.match_indices) {
        const Eigen::Vector3d& x1 = cloud_ref.positions[matches.pairs[m].ref_index];
        const Eigen::Vector3d& x2 = cloud_tgt.positions[matches.pairs[m].tgt_index];
        if ((x1 - x2).norm() < kappa * (x1 - center).norm()) {
            pruned.match_indices.push_back(m);
        }
    }
    return pruned;
}

CorrespondenceSample project_matches_to_pixels(const CameraPairMatches& pair,
                                               const MatchSet& matches,
                                               const PointCloud& cloud_ref,
                                               const PointCloud& cloud_tgt,
                                               const CameraView& ref_view,
                                               const CameraView& tgt_view,
                                               const std::string& condition_tag, double z_min) {
    struct Candidate {
        Pixel ref_pixel;
        Pixel tgt_pixel;
        double ref_depth;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(pair.match_indices.size());
    for (int m : pair.match_indices) {
        const auto ref_proj =
            project(cloud_ref.positions[matches.pairs[m].ref_index], ref_view, z_min);
        if (!ref_proj) continue;
        const auto tgt_proj =
            project(cloud_tgt.positions[matches.pairs[m].tgt_index], tgt_view, z_min);
        if (!tgt_proj) continue;
        candidates.push_back({ref_proj->pixel, tgt_proj->pixel, ref_proj->depth});
    }

    // per integer reference pixel keep the nearest candidate, first on ties
    std::unordered_map<int64_t, int> winner;
    winner.reserve(candidates.size());
    for (size_t c = 0; c < candidates.size(); ++c) {
        const int64_t key =
            static_cast<int64_t>(pixel_cell(candidates[c].ref_pixel.v, ref_view.height)) *
                ref_view.width +
            pixel_cell(candidates[c].ref_pixel.u, ref_view.width);
        auto [it, inserted] = winner.try_emplace(key, static_cast<int>(c));
        if (!inserted && candidates[c].ref_depth < candidates[it->second].ref_depth) {
            it->second = static_cast<int>(c);
        }
    }
    std::vector<char> keep(candidates.size(), 0);
    for (const auto& [key, c] : winner) keep[c] = 1;

    CorrespondenceSample sample;
    sample.ref_view_id = ref_view.view_id;
    sample.target_view_id = tgt_view.view_id;
    sample.ref_image_path = ref_view.image_path;
    sample.target_image_path = tgt_view.image_path;
    sample.condition_tag = condition_tag;
    for (size_t c = 0; c < candidates.size(); ++c) {
        if (!keep[c]) continue;
        sample.x_ref.push_back(candidates[c].ref_pixel);
        sample.x_tgt.push_back(candidates[c].tgt_pixel);
    }
    return sample;
}

}  // namespace seasoncorr
