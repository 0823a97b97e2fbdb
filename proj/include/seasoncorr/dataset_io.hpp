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
#include "seasoncorr/pointcloud.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace seasoncorr {

/// One reference/target image pair with N matched pixel coordinate pairs.
/// x_ref and x_tgt are parallel lists; image paths are carried in memory
/// only (the on-disk format stores view ids, pixels and the condition tag).
struct CorrespondenceSample {
    std::string ref_view_id;
    std::string target_view_id;
    std::string ref_image_path;
    std::string target_image_path;
    std::string condition_tag;
    std::vector<Pixel> x_ref;
    std::vector<Pixel> x_tgt;

    size_t size() const { return x_ref.size(); }
};

/// Optional image bounds for validating coordinates while parsing.
struct SampleBounds {
    int ref_width = 0, ref_height = 0;
    int tgt_width = 0, tgt_height = 0;
};

/// Format: header `CORR 1 <ref_view_id> <target_view_id> <tag> <N>` followed
/// by N lines `ur vr ut vt`. Spaces in the condition tag become underscores
/// on disk; doubles use shortest round-trip decimals.
void write_sample(const CorrespondenceSample& sample, std::ostream& out);

/// Parses one sample. Throws ParseError (with line number) for malformed
/// headers, length mismatches, nonfinite/negative coordinates, and, when
/// bounds are given, coordinates outside them. `source` names the stream
/// in error messages.
CorrespondenceSample read_sample(std::istream& in, const std::string& source = "<stream>",
                                 const std::optional<SampleBounds>& bounds = std::nullopt);

void write_sample_file(const CorrespondenceSample& sample, const std::string& path);

/// Reads a one-sample file; trailing non-empty content is a ParseError.
CorrespondenceSample read_sample_file(const std::string& path,
                                      const std::optional<SampleBounds>& bounds = std::nullopt);

/// Per-condition counts over a set of samples.
struct ConditionStats {
    std::string condition_tag;
    int64_t image_pair_count = 0;
    double mean_correspondences = 0.0;
};

struct DatasetStats {
    std::vector<ConditionStats> conditions;  // sorted by condition_tag
};

DatasetStats compute_statistics(const std::vector<CorrespondenceSample>& samples);

/// Fixed TSV: `condition\tpairs\tmean_n`, mean with one decimal.
void write_statistics_tsv(const DatasetStats& stats, std::ostream& out);

// --- poses ----------------------------------------------------------------

/// Poses file: one view per line, `#` comments, whitespace-separated:
/// view_id traversal_id image_path qw qx qy qz tx ty tz fx fy cx cy width height
/// Quaternion is camera-from-world. Throws ParseError on malformed lines.
std::vector<CameraView> read_poses(std::istream& in, const std::string& source = "<stream>");
std::vector<CameraView> read_poses_file(const std::string& path);
void write_poses(const std::vector<CameraView>& views, std::ostream& out);
void write_poses_file(const std::vector<CameraView>& views, const std::string& path);

// --- point clouds ---------------------------------------------------------

/// Cloud file: header `PLYLITE <n_points>`, then per point
/// `x y z k v1 ... vk` with k visibility entries.
void write_cloud(const PointCloud& cloud, std::ostream& out);
PointCloud read_cloud(std::istream& in, const std::string& source = "<stream>");
void write_cloud_file(const PointCloud& cloud, const std::string& path);
PointCloud read_cloud_file(const std::string& path);

// --- depth maps -----------------------------------------------------------

/// Depth map file: ASCII header `DEPTH <view_id> <width> <height>\n` followed
/// by width*height little-endian float32 values, row-major; <= 0 is invalid.
void write_depth_map(const DepthMap& depth, std::ostream& out);
DepthMap read_depth_map(std::istream& in, const std::string& source = "<stream>");
void write_depth_map_file(const DepthMap& depth, const std::string& path);
DepthMap read_depth_map_file(const std::string& path);

// --- manifests ------------------------------------------------------------

/// Manifest: one sample path per line (relative paths resolved by callers).
std::vector<std::string> read_manifest_file(const std::string& path);
void write_manifest_file(const std::vector<std::string>& paths, const std::string& path);

/// Shortest decimal representation that round-trips the double exactly.
std::string format_double(double value);

}  // namespace seasoncorr
