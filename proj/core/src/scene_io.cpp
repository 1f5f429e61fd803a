#include "corgs/errors.hpp"
#include "corgs/field_io.hpp"
#include "corgs/scene.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>

namespace corgs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json camera_to_json(const Camera& c) {
    const auto& k = c.intrinsics;
    return {{"fx", k.fx},
            {"fy", k.fy},
            {"cx", k.cx},
            {"cy", k.cy},
            {"w", k.width},
            {"h", k.height},
            {"quat", {c.rotation.w(), c.rotation.x(), c.rotation.y(), c.rotation.z()}},
            {"trans", {c.translation.x(), c.translation.y(), c.translation.z()}}};
}

Camera camera_from_json(const json& j) {
    try {
        Camera c;
        c.intrinsics.fx = j.at("fx").get<double>();
        c.intrinsics.fy = j.at("fy").get<double>();
        c.intrinsics.cx = j.at("cx").get<double>();
        c.intrinsics.cy = j.at("cy").get<double>();
        c.intrinsics.width = j.at("w").get<int>();
        c.intrinsics.height = j.at("h").get<int>();
        const auto q = j.at("quat").get<std::vector<double>>();
        const auto t = j.at("trans").get<std::vector<double>>();
        if (q.size() != 4 || t.size() != 3) {
            throw FormatError("camera quat/trans must have 4/3 entries", 0);
        }
        c.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
        c.translation = Vec3(t[0], t[1], t[2]);
        return c;
    } catch (const json::exception& e) {
        throw FormatError(std::string("invalid camera entry: ") + e.what(), 0);
    }
}

Vec3 vec3_from_json(const json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 3) {
        throw FormatError("expected a 3-vector", 0);
    }
    return {v[0], v[1], v[2]};
}

std::string indexed(const char* split, std::size_t i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%03zu.%s", split, i, ext);
    return buf;
}

}  // namespace

void save_dataset(const fs::path& dir, const SceneDataset& dataset) {
    dataset.validate();
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "depths");

    json cams = {{"version", 1},
                 {"background", {dataset.background.x(), dataset.background.y(), dataset.background.z()}},
                 {"bounds",
                  {{"min", {dataset.bounds.min.x(), dataset.bounds.min.y(), dataset.bounds.min.z()}},
                   {"max", {dataset.bounds.max.x(), dataset.bounds.max.y(), dataset.bounds.max.z()}}}},
                 {"train", json::array()},
                 {"test", json::array()}};
    for (const auto& c : dataset.train_cameras) {
        cams["train"].push_back(camera_to_json(c));
    }
    for (const auto& c : dataset.test_cameras) {
        cams["test"].push_back(camera_to_json(c));
    }
    std::ofstream(dir / "cameras.json") << cams.dump(2) << '\n';

    auto write_split = [&](const char* split, const std::vector<ImageBuffer>& images,
                           const std::vector<ImageBuffer>& depths) {
        for (std::size_t i = 0; i < images.size(); ++i) {
            write_png(dir / "images" / indexed(split, i, "png"), images[i]);
            write_raw_image(dir / "images" / indexed(split, i, "raw"), images[i]);
        }
        for (std::size_t i = 0; i < depths.size(); ++i) {
            write_raw_image(dir / "depths" / indexed(split, i, "raw"), depths[i]);
        }
    };
    write_split("train", dataset.train_images, dataset.train_depths);
    write_split("test", dataset.test_images, dataset.test_depths);
    if (dataset.ground_truth_field) {
        save_field(*dataset.ground_truth_field, dir / "gt_field.bin");
    }
}

SceneDataset load_dataset(const fs::path& dir) {
    std::ifstream in(dir / "cameras.json");
    if (!in) {
        throw std::runtime_error("load_dataset: cannot open " + (dir / "cameras.json").string());
    }
    json cams;
    try {
        cams = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("cameras.json: ") + e.what(), e.byte);
    }
    if (cams.value("version", 0) != 1) {
        throw FormatError("cameras.json: unsupported version", 0);
    }
    SceneDataset data;
    try {
        if (cams.contains("background")) {
            data.background = vec3_from_json(cams["background"]);
        }
        if (cams.contains("bounds")) {
            data.bounds.min = vec3_from_json(cams["bounds"].at("min"));
            data.bounds.max = vec3_from_json(cams["bounds"].at("max"));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("cameras.json: ") + e.what(), 0);
    }
    for (const auto& c : cams.value("train", json::array())) {
        data.train_cameras.push_back(camera_from_json(c));
    }
    for (const auto& c : cams.value("test", json::array())) {
        data.test_cameras.push_back(camera_from_json(c));
    }
    auto read_split = [&](const char* split, std::size_t n, std::vector<ImageBuffer>& images,
                          std::vector<ImageBuffer>& depths) {
        for (std::size_t i = 0; i < n; ++i) {
            images.push_back(read_raw_image(dir / "images" / indexed(split, i, "raw")));
        }
        for (std::size_t i = 0; i < n; ++i) {
            const fs::path p = dir / "depths" / indexed(split, i, "raw");
            if (!fs::exists(p)) {
                depths.clear();
                break;
            }
            depths.push_back(read_raw_image(p));
        }
    };
    read_split("train", data.train_cameras.size(), data.train_images, data.train_depths);
    read_split("test", data.test_cameras.size(), data.test_images, data.test_depths);
    if (fs::exists(dir / "gt_field.bin")) {
        data.ground_truth_field = load_field(dir / "gt_field.bin");
    }
    data.validate();
    return data;
}

}  // namespace corgs
