#include "organoquant/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "organoquant/czi.hpp"
#include "organoquant/instance_io.hpp"
#include "organoquant/pgm.hpp"

namespace organoquant::pipeline {
namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config parsing

void require_known_keys(const json& obj, std::initializer_list<const char*> known,
                        const char* where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) ok = true;
        if (!ok)
            throw UnknownKey("unknown key \"" + it.key() + "\" in " + where);
    }
}

long get_integer(const json& v, const char* name, long lo, long hi) {
    if (!v.is_number_integer())
        throw InvalidValue(std::string(name) + " must be an integer");
    long x = v.get<long>();
    if (x < lo || x > hi)
        throw InvalidValue(std::string(name) + " = " + std::to_string(x) +
                           " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
}

double get_number(const json& v, const char* name, double lo, double hi) {
    if (!v.is_number())
        throw InvalidValue(std::string(name) + " must be a number");
    double x = v.get<double>();
    if (!(x >= lo && x <= hi))
        throw InvalidValue(std::string(name) + " = " + std::to_string(x) +
                           " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
}

std::string get_string(const json& v, const char* name) {
    if (!v.is_string())
        throw InvalidValue(std::string(name) + " must be a string");
    return v.get<std::string>();
}

// ---------------------------------------------------------------------------
// Per-image work

struct ImageResult {
    bool ok = false;
    std::string error;
    int width = 0;   // raster dims the cell instances are indexed against
    int height = 0;
    contours::ContourAnalysis contour;
    cells::CellAnalysis cell;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw Error("cannot read " + path.string());
    return bytes;
}

bool looks_like_container(std::span<const std::uint8_t> bytes) {
    static constexpr char kTag[] = "ZISRAW";
    return bytes.size() >= 6 && std::equal(kTag, kTag + 6, bytes.begin());
}

ImageResult process_image(const std::filesystem::path& input, const PipelineConfig& config) {
    ImageResult result;
    try {
        std::vector<std::uint8_t> bytes = read_file(input);

        ChannelImage ncad;
        ChannelImage pax6;
        if (looks_like_container(bytes)) {
            ingest::ContainerIndex index = ingest::parse_container(bytes);
            ncad = ingest::extract_channel(index, bytes, kContourMarker,
                                           config.marker_mapping);
            pax6 = ingest::extract_channel(index, bytes, kCellMarker,
                                           config.marker_mapping);
        } else {
            // Raw graymaps carry one anonymous channel; both analyses run on it.
            ncad = ingest::read_pgm(bytes);
            ncad.set_marker(input.stem().string());
            pax6 = ncad;
        }

        result.width = pax6.width();
        result.height = pax6.height();

        contours::ContourParams contour_params;
        contour_params.threshold = config.threshold;
        contour_params.morph_radius = config.morph_radius;
        contour_params.min_area = config.min_area;
        contour_params.theta = config.theta;
        result.contour = contours::analyze_contours(ncad, contour_params);

        cells::CellParams cell_params;
        cell_params.threshold = config.threshold;
        cell_params.morph_radius = config.morph_radius;
        cell_params.n_rays = config.n_rays;
        cell_params.prob_thresh = config.prob_thresh;
        cell_params.nms_thresh = config.nms_thresh;
        if (config.maps_source.kind == MapsSource::Kind::External) {
            std::filesystem::path maps_path =
                std::filesystem::path(config.maps_source.directory) /
                (input.stem().string() + ".orgqmap");
            cells::DetectionMaps maps = cells::load_maps(read_file(maps_path));
            result.cell = cells::analyze_cells(pax6, cell_params, &maps);
        } else {
            result.cell = cells::analyze_cells(pax6, cell_params, nullptr);
        }
        result.ok = true;
    } catch (const std::exception& e) {
        result.ok = false;
        result.error = e.what();
    }
    return result;
}

// ---------------------------------------------------------------------------
// Output writers

std::string sanitize_id(const std::string& id) {
    std::string out;
    for (char c : id)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("cannot write " + path.string());
}

json diagnostics_json(const ImageOutcome& outcome, const ImageResult& result,
                      const std::optional<double>& normalized_mean,
                      const std::optional<std::vector<double>>& normalized_cells) {
    json contour;
    const auto& cd = result.contour.diag;
    const auto& cs = result.contour.stats;
    contour["threshold"] = cd.threshold_value;
    contour["foreground_px"] = cd.foreground_px;
    contour["opened_px"] = cd.opened_px;
    contour["components_before_min_area"] = cd.components_before_min_area;
    contour["components"] = cd.components;
    contour["holes"] = cd.holes;
    contour["point_counts"] = cd.point_counts;
    contour["total"] = cs.total;
    contour["n1"] = cs.n1;
    contour["n2"] = cs.n2;
    contour["theta"] = cs.theta;
    contour["cr"] = cs.cr.defined() ? json(cs.cr.value()) : json("inf");

    json cell;
    const auto& xd = result.cell.diag;
    const auto& xs = result.cell.stats;
    cell["threshold"] = xd.threshold_value;
    cell["mask_px"] = xd.mask_px;
    cell["candidates"] = xd.candidate_count;
    cell["instances"] = xs.cell_count;
    cell["per_cell_means"] = xs.per_cell_means;
    cell["i_avg_raw"] = xs.cell_count > 0 ? json(xs.i_avg) : json(nullptr);
    cell["i_avg_normalized"] = normalized_mean ? json(*normalized_mean) : json(nullptr);
    cell["per_cell_normalized"] =
        normalized_cells ? json(*normalized_cells) : json(nullptr);

    json doc;
    doc["image_id"] = outcome.image_id;
    doc["group"] = outcome.group;
    doc["input"] = outcome.input;
    doc["contours"] = contour;
    doc["cells"] = cell;
    return doc;
}

}  // namespace

PipelineConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw MalformedJson(e.what());
    }
    if (!doc.is_object()) throw MalformedJson("config document must be a JSON object");

    require_known_keys(doc,
                       {"groups", "marker_mapping", "theta", "threshold", "morph_radius",
                        "min_area", "n_rays", "prob_thresh", "nms_thresh", "ap_tau",
                        "normalization_scope", "maps_source", "output_dir"},
                       "config");

    PipelineConfig config;

    if (!doc.contains("groups") || !doc["groups"].is_array() || doc["groups"].empty())
        throw InvalidValue("config requires a non-empty \"groups\" array");
    for (const auto& g : doc["groups"]) {
        if (!g.is_object()) throw InvalidValue("each group must be an object");
        require_known_keys(g, {"name", "inputs"}, "group");
        GroupSpec spec;
        spec.name = get_string(g.at("name"), "group name");
        if (spec.name.empty()) throw InvalidValue("group name must not be empty");
        if (!g.contains("inputs") || !g["inputs"].is_array())
            throw InvalidValue("group \"" + spec.name + "\" requires an \"inputs\" array");
        for (const auto& p : g["inputs"])
            spec.inputs.push_back(get_string(p, "group input path"));
        for (const auto& existing : config.groups)
            if (existing.name == spec.name)
                throw InvalidValue("duplicate group name \"" + spec.name + "\"");
        config.groups.push_back(std::move(spec));
    }

    if (doc.contains("marker_mapping")) {
        if (!doc["marker_mapping"].is_object())
            throw InvalidValue("marker_mapping must be an object");
        for (auto it = doc["marker_mapping"].begin(); it != doc["marker_mapping"].end(); ++it)
            config.marker_mapping[it.key()] =
                static_cast<int>(get_integer(it.value(), "marker channel index", 0, 1 << 20));
    }

    if (doc.contains("theta"))
        config.theta = get_integer(doc["theta"], "theta", 1, 1000000000L);
    if (doc.contains("threshold")) {
        const auto& t = doc["threshold"];
        if (t.is_string() && t.get<std::string>() == "otsu") {
            config.threshold = img::Threshold::otsu();
        } else if (t.is_object()) {
            require_known_keys(t, {"fixed"}, "threshold");
            if (!t.contains("fixed")) throw InvalidValue("threshold object requires \"fixed\"");
            config.threshold = img::Threshold::fixed(
                static_cast<int>(get_integer(t["fixed"], "fixed threshold", 0, 255)));
        } else {
            throw InvalidValue("threshold must be \"otsu\" or {\"fixed\": 0..255}");
        }
    }
    if (doc.contains("morph_radius"))
        config.morph_radius = static_cast<int>(get_integer(doc["morph_radius"], "morph_radius", 1, 64));
    if (doc.contains("min_area"))
        config.min_area = static_cast<int>(get_integer(doc["min_area"], "min_area", 0, 1 << 26));
    if (doc.contains("n_rays"))
        config.n_rays = static_cast<int>(get_integer(doc["n_rays"], "n_rays", 3, 1024));
    if (doc.contains("prob_thresh"))
        config.prob_thresh = get_number(doc["prob_thresh"], "prob_thresh", 0.0, 1.0);
    if (doc.contains("nms_thresh"))
        config.nms_thresh = get_number(doc["nms_thresh"], "nms_thresh", 0.0, 1.0);
    if (doc.contains("ap_tau")) {
        config.ap_tau = get_number(doc["ap_tau"], "ap_tau", 0.0, 1.0);
        if (config.ap_tau <= 0.0) throw InvalidValue("ap_tau must be > 0");
    }
    if (doc.contains("normalization_scope")) {
        std::string s = get_string(doc["normalization_scope"], "normalization_scope");
        if (s == "run") config.normalization_scope = NormalizationScope::Run;
        else if (s == "group") config.normalization_scope = NormalizationScope::Group;
        else throw InvalidValue("normalization_scope must be \"run\" or \"group\"");
    }
    if (doc.contains("maps_source")) {
        const auto& m = doc["maps_source"];
        if (m.is_string() && m.get<std::string>() == "synthesize") {
            config.maps_source = MapsSource::synthesize();
        } else if (m.is_object()) {
            require_known_keys(m, {"external"}, "maps_source");
            if (!m.contains("external"))
                throw InvalidValue("maps_source object requires \"external\"");
            config.maps_source =
                MapsSource::external(get_string(m["external"], "maps_source.external"));
        } else {
            throw InvalidValue("maps_source must be \"synthesize\" or {\"external\": dir}");
        }
    }
    if (doc.contains("output_dir")) {
        config.output_dir = get_string(doc["output_dir"], "output_dir");
        if (config.output_dir.empty()) throw InvalidValue("output_dir must not be empty");
    }
    return config;
}

std::string serialize_config(const PipelineConfig& config, bool include_output_dir) {
    json doc;
    doc["groups"] = json::array();
    for (const auto& g : config.groups)
        doc["groups"].push_back({{"name", g.name}, {"inputs", g.inputs}});
    doc["marker_mapping"] = json::object();
    for (const auto& [marker, channel] : config.marker_mapping)
        doc["marker_mapping"][marker] = channel;
    doc["theta"] = config.theta;
    if (config.threshold.kind == img::Threshold::Kind::Otsu)
        doc["threshold"] = "otsu";
    else
        doc["threshold"] = {{"fixed", config.threshold.value}};
    doc["morph_radius"] = config.morph_radius;
    doc["min_area"] = config.min_area;
    doc["n_rays"] = config.n_rays;
    doc["prob_thresh"] = config.prob_thresh;
    doc["nms_thresh"] = config.nms_thresh;
    doc["ap_tau"] = config.ap_tau;
    doc["normalization_scope"] =
        config.normalization_scope == NormalizationScope::Run ? "run" : "group";
    if (config.maps_source.kind == MapsSource::Kind::Synthesize)
        doc["maps_source"] = "synthesize";
    else
        doc["maps_source"] = {{"external", config.maps_source.directory}};
    if (include_output_dir) doc["output_dir"] = config.output_dir;
    return doc.dump(2) + "\n";
}

std::string unwrap_manifest(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error&) {
        return text;  // not JSON at all; let parse_config report it
    }
    if (doc.is_object() && doc.contains("tool") && doc.contains("config") &&
        doc["config"].is_object())
        return doc["config"].dump();
    return text;
}

ChannelImage load_channel(const std::filesystem::path& path, const std::string& marker,
                          const std::map<std::string, int>& mapping) {
    std::vector<std::uint8_t> bytes = read_file(path);
    if (looks_like_container(bytes)) {
        ingest::ContainerIndex index = ingest::parse_container(bytes);
        return ingest::extract_channel(index, bytes, marker, mapping);
    }
    ChannelImage image = ingest::read_pgm(bytes);
    image.set_marker(path.stem().string());
    return image;
}

RunReport run_pipeline(const PipelineConfig& config, int jobs) {
    if (config.groups.empty()) throw InvalidValue("run requires at least one group");
    jobs = std::max(1, jobs);

    struct Slot {
        std::string group;
        std::string image_id;
        std::string input;
    };
    std::vector<Slot> slots;
    for (const auto& group : config.groups) {
        for (std::size_t i = 0; i < group.inputs.size(); ++i)
            slots.push_back({group.name, group.name + std::to_string(i + 1),
                             group.inputs[i]});
    }
    if (slots.empty()) throw InvalidValue("run requires at least one input image");

    // Pure per-image work fans out to the pool; everything ordered happens
    // afterwards on this thread.
    std::vector<ImageResult> results(slots.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= slots.size()) return;
            results[i] = process_image(slots[i].input, config);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    RunReport report;
    report.output_dir = config.output_dir;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        ImageOutcome outcome;
        outcome.image_id = slots[i].image_id;
        outcome.group = slots[i].group;
        outcome.input = slots[i].input;
        outcome.ok = results[i].ok;
        outcome.error = results[i].error;
        report.images.push_back(outcome);
        if (results[i].ok) ++report.processed;
        else ++report.failed;
    }
    if (report.processed == 0)
        throw Error("every configured image failed; first error: " + report.images[0].error);

    // Normalize per-cell intensities over the configured scope, then reduce
    // to per-image means.
    std::vector<std::optional<double>> normalized_mean(slots.size());
    std::vector<std::optional<std::vector<double>>> normalized_cells(slots.size());
    auto normalize_span = [&](const std::vector<std::size_t>& members) {
        std::vector<double> pooled;
        for (std::size_t i : members)
            for (double v : results[i].cell.stats.per_cell_means) pooled.push_back(v);
        if (pooled.empty()) return;
        std::vector<double> scaled = cells::normalize_intensities(pooled);
        std::size_t cursor = 0;
        for (std::size_t i : members) {
            std::size_t n = results[i].cell.stats.per_cell_means.size();
            if (n == 0) continue;
            std::vector<double> mine(scaled.begin() + static_cast<long>(cursor),
                                     scaled.begin() + static_cast<long>(cursor + n));
            cursor += n;
            double sum = 0.0;
            for (double v : mine) sum += v;
            normalized_mean[i] = sum / static_cast<double>(n);
            results[i].cell.stats.normalized = mine;
            normalized_cells[i] = std::move(mine);
        }
    };
    if (config.normalization_scope == NormalizationScope::Run) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < slots.size(); ++i)
            if (results[i].ok) members.push_back(i);
        normalize_span(members);
    } else {
        for (const auto& group : config.groups) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < slots.size(); ++i)
                if (results[i].ok && slots[i].group == group.name) members.push_back(i);
            normalize_span(members);
        }
    }

    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!results[i].ok) continue;
        stats::GroupRow row;
        row.group = slots[i].group;
        row.image_id = slots[i].image_id;
        row.contour_total = results[i].contour.stats.total;
        row.cr = results[i].contour.stats.cr;
        row.cell_count = results[i].cell.stats.cell_count;
        if (normalized_mean[i]) row.avg_intensity = *normalized_mean[i];
        report.rows.push_back(std::move(row));
    }

    constexpr stats::Metric kMetrics[] = {stats::Metric::ContourNo, stats::Metric::CR,
                                          stats::Metric::CellNo, stats::Metric::AvgIntensity};
    for (stats::Metric metric : kMetrics) {
        for (const auto& group : config.groups) {
            std::vector<stats::GroupRow> group_rows;
            for (const auto& row : report.rows)
                if (row.group == group.name) group_rows.push_back(row);
            if (group_rows.empty()) continue;
            try {
                report.summaries.push_back(stats::aggregate_group(group_rows, metric));
            } catch (const stats::NoData&) {
                // Metric absent for the whole group; no summary entry.
            }
        }
    }

    // All file output happens here, in a fixed order.
    namespace fs = std::filesystem;
    fs::path out_dir = config.output_dir;
    fs::create_directories(out_dir / "charts");
    fs::create_directories(out_dir / "images");

    std::vector<std::string> outputs;
    auto emit = [&](const fs::path& rel, const std::string& text) {
        write_text_file(out_dir / rel, text);
        outputs.push_back(rel.generic_string());
    };

    emit("rows.csv", stats::emit_table(report.rows, stats::TableFormat::CSV));
    emit("rows.json", stats::emit_table(report.rows, stats::TableFormat::JSON));

    {
        json doc;
        doc["std_mode"] = "sample";
        doc["summaries"] = json::array();
        for (const auto& s : report.summaries) {
            doc["summaries"].push_back({{"group", s.group},
                                        {"metric", stats::metric_key(s.metric)},
                                        {"n", s.n},
                                        {"mean", s.mean},
                                        {"std", s.std_dev},
                                        {"excluded", s.excluded}});
        }
        emit("summary.json", doc.dump(2) + "\n");
    }

    for (stats::Metric metric : kMetrics) {
        std::vector<stats::GroupSummary> chart;
        for (const auto& s : report.summaries)
            if (s.metric == metric) chart.push_back(s);
        if (chart.empty()) continue;
        emit(fs::path("charts") / (std::string(stats::metric_key(metric)) + ".svg"),
             stats::emit_barchart(chart));
    }

    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!results[i].ok) continue;
        char ordinal[8];
        std::snprintf(ordinal, sizeof(ordinal), "%02zu", i + 1);
        fs::path dir = fs::path("images") /
                       (std::string(ordinal) + "_" + sanitize_id(slots[i].image_id));
        fs::create_directories(out_dir / dir);
        emit(dir / "diagnostics.json",
             diagnostics_json(report.images[i], results[i], normalized_mean[i],
                              normalized_cells[i])
                     .dump(2) +
                 "\n");
        InstanceFile file;
        file.width = results[i].width;
        file.height = results[i].height;
        file.n_rays = config.n_rays;
        file.instances = results[i].cell.instances;
        emit(dir / "instances.json", write_instances_json(file));
    }

    {
        json manifest;
        manifest["tool"] = {{"name", "organoquant"}, {"format", 1}};
        manifest["config"] = json::parse(serialize_config(config, /*include_output_dir=*/false));
        manifest["images"] = json::array();
        for (const auto& outcome : report.images) {
            json j;
            j["image_id"] = outcome.image_id;
            j["group"] = outcome.group;
            j["input"] = outcome.input;
            j["status"] = outcome.ok ? "ok" : "failed";
            if (!outcome.ok) j["error"] = outcome.error;
            manifest["images"].push_back(std::move(j));
        }
        manifest["outputs"] = outputs;
        write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    }

    return report;
}

}  // namespace organoquant::pipeline
