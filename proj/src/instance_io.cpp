#include "organoquant/instance_io.hpp"

#include <json.hpp>

namespace organoquant::pipeline {
namespace {

nlohmann::json rle_encode(const std::vector<std::int32_t>& sorted_indices) {
    nlohmann::json runs = nlohmann::json::array();
    std::size_t i = 0;
    while (i < sorted_indices.size()) {
        std::int32_t start = sorted_indices[i];
        std::int32_t len = 1;
        while (i + len < sorted_indices.size() &&
               sorted_indices[i + len] == start + len)
            ++len;
        runs.push_back({start, len});
        i += static_cast<std::size_t>(len);
    }
    return runs;
}

std::vector<std::int32_t> rle_decode(const nlohmann::json& runs) {
    std::vector<std::int32_t> out;
    for (const auto& run : runs) {
        std::int32_t start = run.at(0).get<std::int32_t>();
        std::int32_t len = run.at(1).get<std::int32_t>();
        if (len < 1 || start < 0)
            throw std::invalid_argument("instance pixel run must be [start >= 0, len >= 1]");
        for (std::int32_t k = 0; k < len; ++k) out.push_back(start + k);
    }
    return out;
}

}  // namespace

std::string write_instances_json(const InstanceFile& file) {
    nlohmann::json doc;
    doc["width"] = file.width;
    doc["height"] = file.height;
    doc["n_rays"] = file.n_rays;
    doc["instances"] = nlohmann::json::array();
    for (const auto& inst : file.instances) {
        nlohmann::json j;
        j["id"] = inst.id;
        j["score"] = inst.candidate.score;
        j["center"] = {inst.candidate.center.x, inst.candidate.center.y};
        j["radii"] = inst.candidate.radii;
        j["mean_intensity"] = inst.mean_intensity;
        j["pixels"] = rle_encode(inst.pixels);
        doc["instances"].push_back(std::move(j));
    }
    return doc.dump(2) + "\n";
}

InstanceFile read_instances_json(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    InstanceFile file;
    file.width = doc.at("width").get<int>();
    file.height = doc.at("height").get<int>();
    file.n_rays = doc.value("n_rays", 0);
    for (const auto& j : doc.at("instances")) {
        cells::CellInstance inst;
        inst.id = j.at("id").get<int>();
        inst.candidate.score = j.value("score", 0.0f);
        if (j.contains("center"))
            inst.candidate.center = {j["center"].at(0).get<int>(),
                                     j["center"].at(1).get<int>()};
        if (j.contains("radii"))
            inst.candidate.radii = j["radii"].get<std::vector<float>>();
        inst.mean_intensity = j.value("mean_intensity", 0.0);
        inst.pixels = rle_decode(j.at("pixels"));
        file.instances.push_back(std::move(inst));
    }
    return file;
}

}  // namespace organoquant::pipeline
