#pragma once

#include <filesystem>

namespace organoquant::synthetic {

/// Materializes a deterministic sample dataset on disk: two groups of three
/// 4-channel container images (one continuous-ring group, one fragmented
/// group) plus a ready-to-run config.json. Returns the config path.
std::filesystem::path write_sample_dataset(const std::filesystem::path& dir);

}  // namespace organoquant::synthetic
