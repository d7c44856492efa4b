#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "organoquant/cells.hpp"
#include "organoquant/contours.hpp"
#include "organoquant/errors.hpp"
#include "organoquant/image_ops.hpp"
#include "organoquant/stats.hpp"

namespace organoquant::pipeline {

ORQ_DEFINE_ERROR(MalformedJson)
ORQ_DEFINE_ERROR(UnknownKey)
ORQ_DEFINE_ERROR(InvalidValue)

struct GroupSpec {
    std::string name;
    std::vector<std::string> inputs;

    bool operator==(const GroupSpec&) const = default;
};

enum class NormalizationScope { Run, Group };

struct MapsSource {
    enum class Kind { Synthesize, External };

    static MapsSource synthesize() { return {Kind::Synthesize, {}}; }
    static MapsSource external(std::string dir) { return {Kind::External, std::move(dir)}; }

    Kind kind = Kind::Synthesize;
    std::string directory;

    bool operator==(const MapsSource&) const = default;
};

/// Run configuration. Unspecified fields take these defaults; unknown JSON
/// keys are rejected.
struct PipelineConfig {
    std::vector<GroupSpec> groups;
    std::map<std::string, int> marker_mapping;
    long theta = 200;
    img::Threshold threshold = img::Threshold::otsu();
    int morph_radius = 1;
    int min_area = 20;
    int n_rays = 32;
    double prob_thresh = 0.5;
    double nms_thresh = 0.4;
    double ap_tau = 0.5;
    NormalizationScope normalization_scope = NormalizationScope::Run;
    MapsSource maps_source = MapsSource::synthesize();
    std::string output_dir = "out";

    bool operator==(const PipelineConfig&) const = default;
};

PipelineConfig parse_config(const std::string& json_text);

/// Canonical JSON form of a config; parse_config(serialize_config(c)) == c.
/// `include_output_dir` is false for manifests, which must not depend on
/// where their run was written.
std::string serialize_config(const PipelineConfig& config, bool include_output_dir = true);

/// If `text` is a run manifest, returns the embedded config document;
/// otherwise returns `text` unchanged. Lets `run` restart from a manifest.
std::string unwrap_manifest(const std::string& text);

struct ImageOutcome {
    std::string image_id;
    std::string group;
    std::string input;
    bool ok = false;
    std::string error;
};

struct RunReport {
    std::vector<stats::GroupRow> rows;
    std::vector<stats::GroupSummary> summaries;
    std::vector<ImageOutcome> images;
    int processed = 0;
    int failed = 0;
    std::filesystem::path output_dir;
};

/// Runs the full pipeline over every configured image, writing tables,
/// charts, per-image diagnostics and instances, and a manifest under
/// config.output_dir. Per-image failures are recorded and skipped; throws
/// only if every image fails (or none are configured). Outputs are
/// byte-deterministic for identical inputs and config, regardless of `jobs`.
RunReport run_pipeline(const PipelineConfig& config, int jobs = 1);

/// Marker names the pipeline analyzes on container inputs.
inline constexpr const char* kContourMarker = "N-cad";
inline constexpr const char* kCellMarker = "PAX6";

/// Loads one channel from a container (by marker) or a raw graymap (marker
/// ignored; graymaps carry a single anonymous channel).
ChannelImage load_channel(const std::filesystem::path& path, const std::string& marker,
                          const std::map<std::string, int>& mapping);

}  // namespace organoquant::pipeline
