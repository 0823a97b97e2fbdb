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

#include "seasoncorr/geometry.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace seasoncorr {

/// Dense per-traversal point cloud. visibility[i] is the sorted set of
/// view_ids (same traversal) from which point i was triangulated or is
/// unoccluded; it is never empty after fusion or visibility annotation.
struct PointCloud {
    std::string traversal_id;
    std::vector<Eigen::Vector3d> positions;
    std::vector<std::vector<std::string>> visibility;
};

/// Row-major depth grid for one view; values <= 0 mean invalid.
struct DepthMap {
    std::string view_id;
    int width = 0;
    int height = 0;
    std::vector<float> depths;

    float at(int x, int y) const { return depths[static_cast<size_t>(y) * width + x]; }
};

struct FusionConfig {
    int pixel_stride = 4;       // subsampling of valid depth pixels
    double merge_radius = 0.05; // meters; <= 0 disables merging
    int min_views = 1;          // points seen from fewer views are dropped
};

/// Unprojects the (subsampled) valid depth pixels of every view and merges
/// points lying within merge_radius into centroids with unioned visibility.
/// Deterministic: processing order is (view, row, column).
/// Throws std::invalid_argument on view/depth mismatch.
PointCloud fuse_depth_maps(const std::vector<CameraView>& views,
                           const std::vector<DepthMap>& depths, const FusionConfig& cfg = {});

/// Indices (ascending) of cloud points visible in the view under a per-pixel
/// z-buffer: within each integer pixel cell a point survives iff its depth is
/// within rel_depth_tol of the cell minimum.
std::vector<int> compute_visibility(const PointCloud& cloud, const CameraView& view,
                                    double rel_depth_tol = 0.02,
                                    double z_min = kDefaultZMin);

/// compute_visibility in annotate mode: records view.view_id into the
/// visibility sets of the returned points (kept sorted, no duplicates).
std::vector<int> annotate_visibility(PointCloud& cloud, const CameraView& view,
                                     double rel_depth_tol = 0.02,
                                     double z_min = kDefaultZMin);

/// Exact Euclidean nearest-neighbor index over a fixed set of 3D points.
/// Ties are broken toward the smallest point index, matching a linear scan.
class SpatialIndex {
public:
    struct Result {
        int index = -1;
        double distance = 0.0;
    };

    /// Throws std::invalid_argument for an empty point set.
    explicit SpatialIndex(std::vector<Eigen::Vector3d> points);

    Result nearest(const Eigen::Vector3d& query) const;

    size_t size() const { return points_.size(); }

private:
    struct Node {
        int left = -1;
        int right = -1;
        int begin = 0;   // leaf range into order_
        int end = 0;
        int axis = -1;   // -1 marks a leaf
        double split = 0.0;
    };

    int build(int begin, int end);
    void search(int node, const Eigen::Vector3d& query, Result& best, double& best_sq) const;

    std::vector<Eigen::Vector3d> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

/// Builds the exact NN index for a cloud. Throws std::invalid_argument if
/// the cloud is empty.
SpatialIndex build_spatial_index(const PointCloud& cloud);

/// Exact nearest neighbor with smallest-index tie-break.
SpatialIndex::Result nearest_neighbor(const SpatialIndex& index, const Eigen::Vector3d& query);

}  // namespace seasoncorr
