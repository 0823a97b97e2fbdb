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

#include "seasoncorr/geometry.hpp"

#include <stdexcept>

namespace seasoncorr {

void finalize_view(CameraView& view) {
    const double norm = view.rotation.norm();
    if (!(norm > 1e-12) || !std::isfinite(norm)) {
        throw std::invalid_argument("view '" + view.view_id + "': quaternion norm is degenerate");
    }
    view.rotation.normalize();
    if (!(view.fx > 0.0) || !(view.fy > 0.0)) {
        throw std::invalid_argument("view '" + view.view_id + "': focal lengths must be positive");
    }
    if (view.width <= 0 || view.height <= 0) {
        throw std::invalid_argument("view '" + view.view_id + "': image size must be positive");
    }
    if (!(view.cx >= 0.0 && view.cx < view.width) || !(view.cy >= 0.0 && view.cy < view.height)) {
        throw std::invalid_argument("view '" + view.view_id + "': principal point outside image");
    }
}

Eigen::Vector3d world_to_camera(const Eigen::Vector3d& point, const CameraView& view) {
    return view.rotation * point + view.translation;
}

Eigen::Vector3d camera_center(const CameraView& view) {
    return -(view.rotation.conjugate() * view.translation);
}

std::optional<Projection> project(const Eigen::Vector3d& point, const CameraView& view,
                                  double z_min) {
    const Eigen::Vector3d cam = world_to_camera(point, view);
    if (!(cam.z() > z_min)) {
        return std::nullopt;
    }
    Projection result;
    result.pixel.u = view.fx * cam.x() / cam.z() + view.cx;
    result.pixel.v = view.fy * cam.y() / cam.z() + view.cy;
    result.depth = cam.z();
    if (result.pixel.u < 0.0 || result.pixel.u >= view.width || result.pixel.v < 0.0 ||
        result.pixel.v >= view.height || !std::isfinite(result.pixel.u) ||
        !std::isfinite(result.pixel.v)) {
        return std::nullopt;
    }
    return result;
}

Eigen::Vector3d unproject(const Pixel& pixel, double depth, const CameraView& view) {
    if (!(depth > 0.0)) {
        throw std::invalid_argument("unproject: depth must be positive");
    }
    const Eigen::Vector3d cam((pixel.u - view.cx) / view.fx * depth,
                              (pixel.v - view.cy) / view.fy * depth, depth);
    return view.rotation.conjugate() * (cam - view.translation);
}

}  // namespace seasoncorr
