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

#include "seasoncorr/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace seasoncorr {

namespace {

struct VoxelKey {
    int64_t x, y, z;
    bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
    size_t operator()(const VoxelKey& k) const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (uint64_t v : {static_cast<uint64_t>(k.x), static_cast<uint64_t>(k.y),
                           static_cast<uint64_t>(k.z)}) {
            h ^= v;
            h *= 0x100000001b3ull;
        }
        return static_cast<size_t>(h);
    }
};

VoxelKey voxel_of(const Eigen::Vector3d& p, double cell) {
    return {static_cast<int64_t>(std::floor(p.x() / cell)),
            static_cast<int64_t>(std::floor(p.y() / cell)),
            static_cast<int64_t>(std::floor(p.z() / cell))};
}

struct DisjointSet {
    std::vector<int> parent;

    explicit DisjointSet(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        // smaller root wins so component ids follow insertion order
        if (b < a) std::swap(a, b);
        parent[b] = a;
    }
};

}  // namespace

PointCloud fuse_depth_maps(const std::vector<CameraView>& views,
                           const std::vector<DepthMap>& depths, const FusionConfig& cfg) {
    if (views.empty()) {
        throw std::invalid_argument("fuse_depth_maps: no views");
    }
    if (views.size() != depths.size()) {
        throw std::invalid_argument("fuse_depth_maps: one depth map per view required");
    }
    if (cfg.pixel_stride < 1) {
        throw std::invalid_argument("fuse_depth_maps: pixel_stride must be >= 1");
    }
    for (size_t i = 0; i < views.size(); ++i) {
        if (depths[i].width != views[i].width || depths[i].height != views[i].height ||
            depths[i].depths.size() !=
                static_cast<size_t>(depths[i].width) * depths[i].height) {
            throw std::invalid_argument("fuse_depth_maps: depth map '" + depths[i].view_id +
                                        "' does not match view dimensions");
        }
    }

    const int n_views = static_cast<int>(views.size());
    std::vector<std::vector<Eigen::Vector3d>> raw(n_views);
    // unprojection is independent per view; concatenation below fixes the order
#pragma omp parallel for schedule(dynamic)
    for (int vi = 0; vi < n_views; ++vi) {
        const CameraView& view = views[vi];
        const DepthMap& dm = depths[vi];
        for (int y = 0; y < dm.height; y += cfg.pixel_stride) {
            for (int x = 0; x < dm.width; x += cfg.pixel_stride) {
                const float d = dm.at(x, y);
                if (!(d > 0.0f) || !std::isfinite(d)) continue;
                raw[vi].push_back(unproject(Pixel{static_cast<double>(x),
                                                  static_cast<double>(y)},
                                            static_cast<double>(d), view));
            }
        }
    }

    std::vector<Eigen::Vector3d> points;
    std::vector<int> point_view;
    for (int vi = 0; vi < n_views; ++vi) {
        for (const auto& p : raw[vi]) {
            points.push_back(p);
            point_view.push_back(vi);
        }
    }

    const int n = static_cast<int>(points.size());
    DisjointSet dsu(n);
    if (cfg.merge_radius > 0.0 && n > 0) {
        const double r = cfg.merge_radius;
        const double r_sq = r * r;
        std::unordered_map<VoxelKey, std::vector<int>, VoxelKeyHash> grid;
        grid.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            const VoxelKey base = voxel_of(points[i], r);
            for (int64_t dx = -1; dx <= 1; ++dx) {
                for (int64_t dy = -1; dy <= 1; ++dy) {
                    for (int64_t dz = -1; dz <= 1; ++dz) {
                        auto it = grid.find({base.x + dx, base.y + dy, base.z + dz});
                        if (it == grid.end()) continue;
                        for (int j : it->second) {
                            if ((points[i] - points[j]).squaredNorm() <= r_sq) {
                                dsu.unite(i, j);
                            }
                        }
                    }
                }
            }
            grid[base].push_back(i);
        }
    }

    // components keyed by their smallest member, emitted in that order
    std::unordered_map<int, std::vector<int>> members;
    std::vector<int> roots;
    for (int i = 0; i < n; ++i) {
        const int root = dsu.find(i);
        auto [it, inserted] = members.try_emplace(root);
        if (inserted) roots.push_back(root);
        it->second.push_back(i);
    }
    std::sort(roots.begin(), roots.end());

    PointCloud cloud;
    cloud.traversal_id = views.front().traversal_id;
    for (int root : roots) {
        const std::vector<int>& group = members[root];
        Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
        std::vector<std::string> vis;
        for (int i : group) {
            centroid += points[i];
            vis.push_back(views[point_view[i]].view_id);
        }
        std::sort(vis.begin(), vis.end());
        vis.erase(std::unique(vis.begin(), vis.end()), vis.end());
        if (static_cast<int>(vis.size()) < cfg.min_views) continue;
        cloud.positions.push_back(centroid / static_cast<double>(group.size()));
        cloud.visibility.push_back(std::move(vis));
    }
    return cloud;
}

std::vector<int> compute_visibility(const PointCloud& cloud, const CameraView& view,
                                    double rel_depth_tol, double z_min) {
    if (!(rel_depth_tol > 0.0)) {
        throw std::invalid_argument("compute_visibility: rel_depth_tol must be positive");
    }
    const int n = static_cast<int>(cloud.positions.size());
    std::vector<int64_t> cell(n, -1);
    std::vector<double> depth(n, 0.0);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const auto proj = project(cloud.positions[i], view, z_min);
        if (!proj) continue;
        const int cx = pixel_cell(proj->pixel.u, view.width);
        const int cy = pixel_cell(proj->pixel.v, view.height);
        cell[i] = static_cast<int64_t>(cy) * view.width + cx;
        depth[i] = proj->depth;
    }

    std::vector<double> min_depth(static_cast<size_t>(view.width) * view.height,
                                  std::numeric_limits<double>::infinity());
    for (int i = 0; i < n; ++i) {
        if (cell[i] >= 0 && depth[i] < min_depth[cell[i]]) {
            min_depth[cell[i]] = depth[i];
        }
    }

    std::vector<char> visible(n, 0);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        if (cell[i] >= 0 && depth[i] <= min_depth[cell[i]] * (1.0 + rel_depth_tol)) {
            visible[i] = 1;
        }
    }

    std::vector<int> indices;
    for (int i = 0; i < n; ++i) {
        if (visible[i]) indices.push_back(i);
    }
    return indices;
}

std::vector<int> annotate_visibility(PointCloud& cloud, const CameraView& view,
                                     double rel_depth_tol, double z_min) {
    std::vector<int> indices = compute_visibility(cloud, view, rel_depth_tol, z_min);
    for (int i : indices) {
        auto& vis = cloud.visibility[i];
        auto it = std::lower_bound(vis.begin(), vis.end(), view.view_id);
        if (it == vis.end() || *it != view.view_id) {
            vis.insert(it, view.view_id);
        }
    }
    return indices;
}

SpatialIndex::SpatialIndex(std::vector<Eigen::Vector3d> points) : points_(std::move(points)) {
    if (points_.empty()) {
        throw std::invalid_argument("SpatialIndex: empty point set");
    }
    order_.resize(points_.size());
    for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
    nodes_.reserve(2 * points_.size() / 8 + 2);
    root_ = build(0, static_cast<int>(points_.size()));
}

int SpatialIndex::build(int begin, int end) {
    constexpr int kLeafSize = 8;
    const int node_id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    if (end - begin <= kLeafSize) {
        nodes_[node_id].begin = begin;
        nodes_[node_id].end = end;
        return node_id;
    }

    Eigen::Vector3d lo = points_[order_[begin]];
    Eigen::Vector3d hi = lo;
    for (int i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);

    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         const double ca = points_[a][axis];
                         const double cb = points_[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    const double split = points_[order_[mid]][axis];

    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[node_id].axis = axis;
    nodes_[node_id].split = split;
    nodes_[node_id].left = left;
    nodes_[node_id].right = right;
    return node_id;
}

void SpatialIndex::search(int node_id, const Eigen::Vector3d& query, Result& best,
                          double& best_sq) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
        for (int i = node.begin; i < node.end; ++i) {
            const int idx = order_[i];
            const double d_sq = (points_[idx] - query).squaredNorm();
            if (d_sq < best_sq || (d_sq == best_sq && idx < best.index)) {
                best_sq = d_sq;
                best.index = idx;
            }
        }
        return;
    }
    const double diff = query[node.axis] - node.split;
    const int near = diff <= 0.0 ? node.left : node.right;
    const int far = diff <= 0.0 ? node.right : node.left;
    search(near, query, best, best_sq);
    // equal distance may still improve the tie-break, hence <=
    if (diff * diff <= best_sq) {
        search(far, query, best, best_sq);
    }
}

SpatialIndex::Result SpatialIndex::nearest(const Eigen::Vector3d& query) const {
    Result best;
    best.index = std::numeric_limits<int>::max();
    double best_sq = std::numeric_limits<double>::infinity();
    search(root_, query, best, best_sq);
    best.distance = std::sqrt(best_sq);
    return best;
}

SpatialIndex build_spatial_index(const PointCloud& cloud) {
    if (cloud.positions.empty()) {
        throw std::invalid_argument("build_spatial_index: empty cloud");
    }
    return SpatialIndex(cloud.positions);
}

SpatialIndex::Result nearest_neighbor(const SpatialIndex& index, const Eigen::Vector3d& query) {
    return index.nearest(query);
}

}  // namespace seasoncorr
