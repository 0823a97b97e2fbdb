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

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <optional>
#include <string>

namespace seasoncorr {

// Points closer than this to the camera plane are treated as unprojectable.
inline constexpr double kDefaultZMin = 0.05;

/// Pinhole view: intrinsics plus a camera-from-world rigid pose,
/// i.e. x_cam = R * x_world + t.
struct CameraView {
    std::string view_id;
    std::string traversal_id;
    std::string image_path;
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;
};

/// Continuous image coordinates. Integer (u, v) names the center of pixel
/// column u, row v; coordinates stay unrounded until a grid lookup.
struct Pixel {
    double u = 0.0;
    double v = 0.0;
};

struct Projection {
    Pixel pixel;
    double depth = 0.0;  // camera-frame z, meters
};

/// Normalizes the quaternion and checks the intrinsics invariants.
/// Throws std::invalid_argument on violation.
void finalize_view(CameraView& view);

Eigen::Vector3d world_to_camera(const Eigen::Vector3d& point, const CameraView& view);

/// Camera center in world coordinates, -R^T * t.
Eigen::Vector3d camera_center(const CameraView& view);

/// Projects a world point. Absent when the point is behind the near plane
/// or falls outside [0, width) x [0, height).
std::optional<Projection> project(const Eigen::Vector3d& point, const CameraView& view,
                                  double z_min = kDefaultZMin);

/// Inverse of project(). Throws std::invalid_argument for depth <= 0.
Eigen::Vector3d unproject(const Pixel& pixel, double depth, const CameraView& view);

/// Integer cell containing a continuous pixel coordinate, clamped to
/// [0, extent). Pixel centers sit at integers, so this rounds half up.
inline int pixel_cell(double coord, int extent) {
    int cell = static_cast<int>(std::floor(coord + 0.5));
    if (cell < 0) return 0;
    if (cell >= extent) return extent - 1;
    return cell;
}

/// Grid cell of a continuous pixel coordinate under an integer stride,
/// clamped to [0, grid_extent). Stride 1 reduces to pixel_cell().
inline int feature_cell(double coord, int stride, int grid_extent) {
    int cell = static_cast<int>(std::floor((coord + 0.5) / stride));
    if (cell < 0) return 0;
    if (cell >= grid_extent) return grid_extent - 1;
    return cell;
}

}  // namespace seasoncorr
