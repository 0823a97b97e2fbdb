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
#include "seasoncorr/geometry.hpp"
#include "seasoncorr/pointcloud.hpp"

#include <string>
#include <vector>

namespace seasoncorr {

struct Match {
    int ref_index = -1;
    int tgt_index = -1;
    double distance = 0.0;  // meters
};

/// Mutual-NN 3D point pairs between two traversals. Each ref index and each
/// target index appears at most once; pairs are sorted by ref_index.
struct MatchSet {
    std::string ref_traversal_id;
    std::string target_traversal_id;
    std::vector<Match> pairs;
};

/// One (reference view, target view) pair with the match indices whose
/// endpoints are visible in both views. match_indices index into a MatchSet.
struct CameraPairMatches {
    std::string ref_view_id;
    std::string target_view_id;
    double camera_distance = 0.0;  // meters, between the two camera centers
    std::vector<int> match_indices;
};

// Defaults from the two capture profiles.
inline constexpr double kDefaultKappa = 0.01;
inline constexpr int kDefaultMinCommon = 500;
inline constexpr double kCmuMaxCameraDistance = 0.5;
inline constexpr double kRobotcarMaxCameraDistance = 2.0;

/// (i, j) is a match iff j is the exact NN of ref[i] in tgt and i the exact
/// NN of tgt[j] in ref, with smallest-index tie-breaks. Throws
/// std::invalid_argument for empty clouds.
MatchSet mutual_nearest_neighbors(const PointCloud& cloud_ref, const PointCloud& cloud_tgt);

/// All (reference view, target view) pairs with at least min_common matches
/// visible in both views and camera centers strictly closer than
/// max_cam_dist. Views are filtered by the clouds' traversal ids; output
/// sorted by (ref_view_id, target_view_id).
std::vector<CameraPairMatches> select_camera_pairs(const MatchSet& matches,
                                                   const PointCloud& cloud_ref,
                                                   const PointCloud& cloud_tgt,
                                                   const std::vector<CameraView>& views,
                                                   int min_common = kDefaultMinCommon,
                                                   double max_cam_dist = kCmuMaxCameraDistance);

/// Keeps match m iff |X1 - X2| < kappa * |X1 - camera_center(ref_view)|,
/// where X1/X2 are the ref/target endpoint positions. Order preserved.
CameraPairMatches prune_matches(const CameraPairMatches& pair, const MatchSet& matches,
                                const PointCloud& cloud_ref, const PointCloud& cloud_tgt,
                                const CameraView& ref_view, double kappa = kDefaultKappa);

/// Projects the retained matches of a (pruned) camera pair into both images.
/// Matches with either projection absent are dropped; matches landing on the
/// same integer reference pixel keep only the one with the smallest
/// reference depth (first wins on equal depth). N may come out 0.
CorrespondenceSample project_matches_to_pixels(const CameraPairMatches& pair,
                                               const MatchSet& matches,
                                               const PointCloud& cloud_ref,
                                               const PointCloud& cloud_tgt,
                                               const CameraView& ref_view,
                                               const CameraView& tgt_view,
                                               const std::string& condition_tag,
                                               double z_min = kDefaultZMin);

}  // namespace seasoncorr
