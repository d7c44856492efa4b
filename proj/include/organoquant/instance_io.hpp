#pragma once

#include <string>
#include <vector>

#include "organoquant/cells.hpp"

namespace organoquant::pipeline {

/// Instance set persisted for a single image, re-loadable for evaluation.
struct InstanceFile {
    int width = 0;
    int height = 0;
    int n_rays = 0;
    std::vector<cells::CellInstance> instances;
};

/// JSON persistence of instance sets: id, score, center, radii, and the
/// pixel set as [start, length] runs over row-major indices.
std::string write_instances_json(const InstanceFile& file);
InstanceFile read_instances_json(const std::string& text);

}  // namespace organoquant::pipeline
