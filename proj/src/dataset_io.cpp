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

#include "seasoncorr/dataset_io.hpp"

#include "seasoncorr/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace seasoncorr {

namespace {

std::vector<std::string_view> split_tokens(std::string_view line) {
    std::vector<std::string_view> tokens;
    size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) {
            ++pos;
        }
        const size_t start = pos;
        while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r') {
            ++pos;
        }
        if (pos > start) tokens.push_back(line.substr(start, pos - start));
    }
    return tokens;
}

double parse_double(std::string_view token, const std::string& source, int line) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ParseError(source, line, "expected a number, got '" + std::string(token) + "'");
    }
    return value;
}

int64_t parse_int(std::string_view token, const std::string& source, int line) {
    int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ParseError(source, line, "expected an integer, got '" + std::string(token) + "'");
    }
    return value;
}

std::string underscored(std::string tag) {
    std::replace(tag.begin(), tag.end(), ' ', '_');
    return tag;
}

std::string despaced(std::string tag) {
    std::replace(tag.begin(), tag.end(), '_', ' ');
    return tag;
}

std::ofstream open_output(const std::string& path, std::ios_base::openmode mode = {}) {
    std::ofstream out(path, mode);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    return out;
}

std::ifstream open_input(const std::string& path, std::ios_base::openmode mode = {}) {
    std::ifstream in(path, mode);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "' for reading");
    }
    return in;
}

}  // namespace

std::string format_double(double value) {
    char buf[32];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

void write_sample(const CorrespondenceSample& sample, std::ostream& out) {
    out << "CORR 1 " << sample.ref_view_id << ' ' << sample.target_view_id << ' '
        << underscored(sample.condition_tag) << ' ' << sample.x_ref.size() << '\n';
    for (size_t i = 0; i < sample.x_ref.size(); ++i) {
        out << format_double(sample.x_ref[i].u) << ' ' << format_double(sample.x_ref[i].v) << ' '
            << format_double(sample.x_tgt[i].u) << ' ' << format_double(sample.x_tgt[i].v)
            << '\n';
    }
}

CorrespondenceSample read_sample(std::istream& in, const std::string& source,
                                 const std::optional<SampleBounds>& bounds) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(source, 1, "empty input, expected a CORR header");
    }
    const auto header = split_tokens(line);
    if (header.size() != 6 || header[0] != "CORR") {
        throw ParseError(source, 1, "malformed header, expected "
                                    "'CORR 1 <ref_view_id> <target_view_id> <tag> <N>'");
    }
    if (header[1] != "1") {
        throw ParseError(source, 1, "unsupported format version '" + std::string(header[1]) + "'");
    }
    const int64_t n = parse_int(header[5], source, 1);
    if (n < 0) {
        throw ParseError(source, 1, "negative correspondence count");
    }

    CorrespondenceSample sample;
    sample.ref_view_id = std::string(header[2]);
    sample.target_view_id = std::string(header[3]);
    sample.condition_tag = despaced(std::string(header[4]));
    sample.x_ref.reserve(static_cast<size_t>(n));
    sample.x_tgt.reserve(static_cast<size_t>(n));

    for (int64_t i = 0; i < n; ++i) {
        const int line_no = static_cast<int>(i) + 2;
        if (!std::getline(in, line)) {
            throw ParseError(source, line_no,
                             "unexpected end of input, expected " + std::to_string(n) +
                                 " correspondence lines");
        }
        const auto tokens = split_tokens(line);
        if (tokens.size() != 4) {
            throw ParseError(source, line_no, "expected 4 coordinates per line");
        }
        Pixel ref_pixel{parse_double(tokens[0], source, line_no),
                        parse_double(tokens[1], source, line_no)};
        Pixel tgt_pixel{parse_double(tokens[2], source, line_no),
                        parse_double(tokens[3], source, line_no)};
        for (double c : {ref_pixel.u, ref_pixel.v, tgt_pixel.u, tgt_pixel.v}) {
            if (!std::isfinite(c) || c < 0.0) {
                throw ParseError(source, line_no, "coordinate out of bounds");
            }
        }
        if (bounds) {
            if (ref_pixel.u >= bounds->ref_width || ref_pixel.v >= bounds->ref_height ||
                tgt_pixel.u >= bounds->tgt_width || tgt_pixel.v >= bounds->tgt_height) {
                throw ParseError(source, line_no, "coordinate out of bounds");
            }
        }
        sample.x_ref.push_back(ref_pixel);
        sample.x_tgt.push_back(tgt_pixel);
    }
    return sample;
}

void write_sample_file(const CorrespondenceSample& sample, const std::string& path) {
    auto out = open_output(path);
    write_sample(sample, out);
    if (!out) {
        throw std::runtime_error("failed writing '" + path + "'");
    }
}

CorrespondenceSample read_sample_file(const std::string& path,
                                      const std::optional<SampleBounds>& bounds) {
    auto in = open_input(path);
    CorrespondenceSample sample = read_sample(in, path, bounds);
    std::string line;
    int line_no = static_cast<int>(sample.size()) + 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!split_tokens(line).empty()) {
            throw ParseError(path, line_no, "trailing content after sample body");
        }
    }
    return sample;
}

DatasetStats compute_statistics(const std::vector<CorrespondenceSample>& samples) {
    std::map<std::string, std::pair<int64_t, int64_t>> by_tag;  // tag -> (pairs, total N)
    for (const CorrespondenceSample& s : samples) {
        auto& entry = by_tag[s.condition_tag];
        entry.first += 1;
        entry.second += static_cast<int64_t>(s.size());
    }
    DatasetStats stats;
    for (const auto& [tag, entry] : by_tag) {
        stats.conditions.push_back(
            {tag, entry.first, static_cast<double>(entry.second) / entry.first});
    }
    return stats;
}

void write_statistics_tsv(const DatasetStats& stats, std::ostream& out) {
    for (const ConditionStats& c : stats.conditions) {
        char mean[32];
        std::snprintf(mean, sizeof(mean), "%.1f", c.mean_correspondences);
        out << c.condition_tag << '\t' << c.image_pair_count << '\t' << mean << '\n';
    }
}

std::vector<CameraView> read_poses(std::istream& in, const std::string& source) {
    std::vector<CameraView> views;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t comment = line.find('#');
        if (comment != std::string::npos) line.resize(comment);
        const auto tokens = split_tokens(line);
        if (tokens.empty()) continue;
        if (tokens.size() != 16) {
            throw ParseError(source, line_no, "expected 16 fields per pose line, got " +
                                                  std::to_string(tokens.size()));
        }
        CameraView view;
        view.view_id = std::string(tokens[0]);
        view.traversal_id = std::string(tokens[1]);
        view.image_path = std::string(tokens[2]);
        const double qw = parse_double(tokens[3], source, line_no);
        const double qx = parse_double(tokens[4], source, line_no);
        const double qy = parse_double(tokens[5], source, line_no);
        const double qz = parse_double(tokens[6], source, line_no);
        view.rotation = Eigen::Quaterniond(qw, qx, qy, qz);
        view.translation = Eigen::Vector3d(parse_double(tokens[7], source, line_no),
                                           parse_double(tokens[8], source, line_no),
                                           parse_double(tokens[9], source, line_no));
        view.fx = parse_double(tokens[10], source, line_no);
        view.fy = parse_double(tokens[11], source, line_no);
        view.cx = parse_double(tokens[12], source, line_no);
        view.cy = parse_double(tokens[13], source, line_no);
        view.width = static_cast<int>(parse_int(tokens[14], source, line_no));
        view.height = static_cast<int>(parse_int(tokens[15], source, line_no));
        try {
            finalize_view(view);
        } catch (const std::invalid_argument& e) {
            throw ParseError(source, line_no, e.what());
        }
        if (!seen_ids.insert(view.view_id).second) {
            throw ParseError(source, line_no, "duplicate view_id '" + view.view_id + "'");
        }
        views.push_back(std::move(view));
    }
    return views;
}

std::vector<CameraView> read_poses_file(const std::string& path) {
    auto in = open_input(path);
    return read_poses(in, path);
}

void write_poses(const std::vector<CameraView>& views, std::ostream& out) {
    out << "# view_id traversal_id image_path qw qx qy qz tx ty tz fx fy cx cy width height\n";
    for (const CameraView& v : views) {
        out << v.view_id << ' ' << v.traversal_id << ' ' << v.image_path << ' '
            << format_double(v.rotation.w()) << ' ' << format_double(v.rotation.x()) << ' '
            << format_double(v.rotation.y()) << ' ' << format_double(v.rotation.z()) << ' '
            << format_double(v.translation.x()) << ' ' << format_double(v.translation.y()) << ' '
            << format_double(v.translation.z()) << ' ' << format_double(v.fx) << ' '
            << format_double(v.fy) << ' ' << format_double(v.cx) << ' ' << format_double(v.cy)
            << ' ' << v.width << ' ' << v.height << '\n';
    }
}

void write_poses_file(const std::vector<CameraView>& views, const std::string& path) {
    auto out = open_output(path);
    write_poses(views, out);
}

void write_cloud(const PointCloud& cloud, std::ostream& out) {
    out << "PLYLITE " << cloud.positions.size() << '\n';
    for (size_t i = 0; i < cloud.positions.size(); ++i) {
        const Eigen::Vector3d& p = cloud.positions[i];
        out << format_double(p.x()) << ' ' << format_double(p.y()) << ' '
            << format_double(p.z()) << ' ' << cloud.visibility[i].size();
        for (const std::string& vid : cloud.visibility[i]) out << ' ' << vid;
        out << '\n';
    }
}

PointCloud read_cloud(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(source, 1, "empty input, expected a PLYLITE header");
    }
    const auto header = split_tokens(line);
    if (header.size() != 2 || header[0] != "PLYLITE") {
        throw ParseError(source, 1, "malformed header, expected 'PLYLITE <n_points>'");
    }
    const int64_t n = parse_int(header[1], source, 1);
    if (n < 0) {
        throw ParseError(source, 1, "negative point count");
    }
    PointCloud cloud;
    cloud.positions.reserve(static_cast<size_t>(n));
    cloud.visibility.reserve(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        const int line_no = static_cast<int>(i) + 2;
        if (!std::getline(in, line)) {
            throw ParseError(source, line_no, "unexpected end of input, expected " +
                                                  std::to_string(n) + " points");
        }
        const auto tokens = split_tokens(line);
        if (tokens.size() < 4) {
            throw ParseError(source, line_no, "expected 'x y z k v1 ... vk'");
        }
        Eigen::Vector3d p(parse_double(tokens[0], source, line_no),
                          parse_double(tokens[1], source, line_no),
                          parse_double(tokens[2], source, line_no));
        if (!p.allFinite()) {
            throw ParseError(source, line_no, "nonfinite point position");
        }
        const int64_t k = parse_int(tokens[3], source, line_no);
        if (k < 1 || tokens.size() != static_cast<size_t>(4 + k)) {
            throw ParseError(source, line_no, "visibility count does not match entries");
        }
        std::vector<std::string> vis;
        vis.reserve(static_cast<size_t>(k));
        for (int64_t j = 0; j < k; ++j) vis.emplace_back(tokens[4 + j]);
        if (!std::is_sorted(vis.begin(), vis.end())) {
            std::sort(vis.begin(), vis.end());
        }
        cloud.positions.push_back(p);
        cloud.visibility.push_back(std::move(vis));
    }
    return cloud;
}

void write_cloud_file(const PointCloud& cloud, const std::string& path) {
    auto out = open_output(path);
    write_cloud(cloud, out);
    if (!out) {
        throw std::runtime_error("failed writing '" + path + "'");
    }
}

PointCloud read_cloud_file(const std::string& path) {
    auto in = open_input(path);
    return read_cloud(in, path);
}

void write_depth_map(const DepthMap& depth, std::ostream& out) {
    out << "DEPTH " << depth.view_id << ' ' << depth.width << ' ' << depth.height << '\n';
    std::vector<unsigned char> bytes(depth.depths.size() * 4);
    for (size_t i = 0; i < depth.depths.size(); ++i) {
        uint32_t bits = 0;
        std::memcpy(&bits, &depth.depths[i], 4);
        bytes[4 * i + 0] = static_cast<unsigned char>(bits & 0xff);
        bytes[4 * i + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
        bytes[4 * i + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
        bytes[4 * i + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

DepthMap read_depth_map(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(source, 1, "empty input, expected a DEPTH header");
    }
    const auto header = split_tokens(line);
    if (header.size() != 4 || header[0] != "DEPTH") {
        throw ParseError(source, 1, "malformed header, expected 'DEPTH <view_id> <w> <h>'");
    }
    DepthMap depth;
    depth.view_id = std::string(header[1]);
    depth.width = static_cast<int>(parse_int(header[2], source, 1));
    depth.height = static_cast<int>(parse_int(header[3], source, 1));
    if (depth.width <= 0 || depth.height <= 0) {
        throw ParseError(source, 1, "depth map dimensions must be positive");
    }
    const size_t count = static_cast<size_t>(depth.width) * depth.height;
    std::vector<unsigned char> bytes(count * 4);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<size_t>(in.gcount()) != bytes.size()) {
        throw ParseError(source, 2, "truncated depth data");
    }
    depth.depths.resize(count);
    for (size_t i = 0; i < count; ++i) {
        const uint32_t bits = static_cast<uint32_t>(bytes[4 * i + 0]) |
                              (static_cast<uint32_t>(bytes[4 * i + 1]) << 8) |
                              (static_cast<uint32_t>(bytes[4 * i + 2]) << 16) |
                              (static_cast<uint32_t>(bytes[4 * i + 3]) << 24);
        std::memcpy(&depth.depths[i], &bits, 4);
    }
    return depth;
}

void write_depth_map_file(const DepthMap& depth, const std::string& path) {
    auto out = open_output(path, std::ios::binary);
    write_depth_map(depth, out);
    if (!out) {
        throw std::runtime_error("failed writing '" + path + "'");
    }
}

DepthMap read_depth_map_file(const std::string& path) {
    auto in = open_input(path, std::ios::binary);
    return read_depth_map(in, path);
}

std::vector<std::string> read_manifest_file(const std::string& path) {
    auto in = open_input(path);
    std::vector<std::string> paths;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) paths.push_back(line);
    }
    return paths;
}

void write_manifest_file(const std::vector<std::string>& paths, const std::string& path) {
    auto out = open_output(path);
    for (const std::string& p : paths) out << p << '\n';
}

}  // namespace seasoncorr
