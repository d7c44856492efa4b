// organoquant: batch quantification of organoid microscopy channels.
//
// Subcommands mirror the pipeline stages so each one can be run and checked
// in isolation: inspect, extract, contours, cells, report, eval, run.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "organoquant/cells.hpp"
#include "organoquant/contours.hpp"
#include "organoquant/czi.hpp"
#include "organoquant/instance_io.hpp"
#include "organoquant/pgm.hpp"
#include "organoquant/pipeline.hpp"
#include "organoquant/stats.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace organoquant;

int log_level() {
    const char* env = std::getenv("ORGANOQUANT_LOG");
    if (!env) return 1;  // warn
    std::string v(env);
    if (v == "quiet") return 0;
    if (v == "warn") return 1;
    if (v == "info") return 2;
    if (v == "debug") return 3;
    return 1;
}

void log_info(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "organoquant: " << msg << "\n";
}

std::vector<std::uint8_t> slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
}

std::string slurp_text(const fs::path& path) {
    auto bytes = slurp(path);
    return std::string(bytes.begin(), bytes.end());
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void spit(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

std::map<std::string, int> mapping_from_flags(const std::vector<std::string>& entries) {
    std::map<std::string, int> mapping;
    for (const auto& e : entries) {
        auto eq = e.find('=');
        if (eq == std::string::npos || eq == 0)
            throw Error("--map expects NAME=CHANNEL, got \"" + e + "\"");
        mapping[e.substr(0, eq)] = std::stoi(e.substr(eq + 1));
    }
    return mapping;
}

json contour_result_json(const contours::ContourAnalysis& analysis) {
    json j;
    j["total"] = analysis.stats.total;
    j["n1"] = analysis.stats.n1;
    j["n2"] = analysis.stats.n2;
    j["theta"] = analysis.stats.theta;
    j["cr"] = analysis.stats.cr.defined() ? json(analysis.stats.cr.value()) : json("inf");
    j["diagnostics"] = {{"threshold", analysis.diag.threshold_value},
                        {"foreground_px", analysis.diag.foreground_px},
                        {"opened_px", analysis.diag.opened_px},
                        {"components_before_min_area", analysis.diag.components_before_min_area},
                        {"components", analysis.diag.components},
                        {"holes", analysis.diag.holes},
                        {"point_counts", analysis.diag.point_counts}};
    return j;
}

}  // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Quantifies organoid microscopy channels: marker contours, "
                 "star-convex cell detections, per-cell intensity, and group reports"};
    app.require_subcommand(1);

    // --- inspect ------------------------------------------------------------
    std::string inspect_input;
    auto* cmd_inspect = app.add_subcommand("inspect", "Dump a container's segment index");
    cmd_inspect->add_option("input", inspect_input, "Container file")->required();

    // --- extract ------------------------------------------------------------
    std::string extract_input;
    std::string extract_marker;
    std::string extract_output;
    std::vector<std::string> extract_map;
    auto* cmd_extract =
        app.add_subcommand("extract", "Extract one channel to a portable graymap");
    cmd_extract->add_option("input", extract_input, "Container file")->required();
    cmd_extract->add_option("--marker", extract_marker, "Marker name")->required();
    cmd_extract->add_option("--map", extract_map, "Marker mapping entry NAME=CHANNEL");
    cmd_extract->add_option("--output,-o", extract_output, "Output .pgm path")->required();

    // --- contours -----------------------------------------------------------
    std::string contours_input;
    std::string contours_marker = pipeline::kContourMarker;
    std::vector<std::string> contours_map;
    long contours_theta = 200;
    int contours_fixed = -1;
    int contours_radius = 1;
    int contours_min_area = 20;
    auto* cmd_contours =
        app.add_subcommand("contours", "Contour statistics for one channel image");
    cmd_contours->add_option("input", contours_input, "Container or graymap")->required();
    cmd_contours->add_option("--marker", contours_marker, "Marker to extract from containers");
    cmd_contours->add_option("--map", contours_map, "Marker mapping entry NAME=CHANNEL");
    cmd_contours->add_option("--theta", contours_theta, "Point-count threshold");
    cmd_contours->add_option("--threshold", contours_fixed,
                             "Fixed binarization level 0..255 (default: Otsu)");
    cmd_contours->add_option("--radius", contours_radius, "Opening radius");
    cmd_contours->add_option("--min-area", contours_min_area, "Minimum component area");

    // --- cells ----------------------------------------------------------------
    std::string cells_input;
    std::string cells_marker = pipeline::kCellMarker;
    std::vector<std::string> cells_map;
    std::string cells_maps_file;
    std::string cells_save_instances;
    std::string cells_save_maps;
    int cells_rays = 32;
    double cells_prob = 0.5;
    double cells_nms = 0.4;
    int cells_fixed = -1;
    int cells_radius = 1;
    auto* cmd_cells = app.add_subcommand("cells", "Cell detections and intensity for one image");
    cmd_cells->add_option("input", cells_input, "Container or graymap")->required();
    cmd_cells->add_option("--marker", cells_marker, "Marker to extract from containers");
    cmd_cells->add_option("--map", cells_map, "Marker mapping entry NAME=CHANNEL");
    cmd_cells->add_option("--maps-file", cells_maps_file,
                          "External ORGQMAP1 predictions (default: synthesize)");
    cmd_cells->add_option("--n-rays", cells_rays, "Radial directions");
    cmd_cells->add_option("--prob-thresh", cells_prob, "Candidate probability threshold");
    cmd_cells->add_option("--nms-thresh", cells_nms, "Suppression IoU threshold");
    cmd_cells->add_option("--threshold", cells_fixed,
                          "Fixed binarization level 0..255 (default: Otsu)");
    cmd_cells->add_option("--radius", cells_radius, "Opening radius");
    cmd_cells->add_option("--save-instances", cells_save_instances,
                          "Write the accepted instances as JSON");
    cmd_cells->add_option("--save-maps", cells_save_maps,
                          "Write the detection maps as ORGQMAP1");

    // --- report ---------------------------------------------------------------
    std::string report_rows;
    std::string report_output = "out";
    auto* cmd_report =
        app.add_subcommand("report", "Re-aggregate an existing rows.json into tables and charts");
    cmd_report->add_option("--rows", report_rows, "rows.json from a previous run")->required();
    cmd_report->add_option("--output,-o", report_output, "Output directory");

    // --- eval -----------------------------------------------------------------
    std::string eval_pred;
    std::string eval_truth;
    double eval_tau = 0.5;
    auto* cmd_eval = app.add_subcommand("eval", "Score predicted instances against truth");
    cmd_eval->add_option("--pred", eval_pred, "Predicted instances JSON")->required();
    cmd_eval->add_option("--truth", eval_truth, "Truth instances JSON")->required();
    cmd_eval->add_option("--tau", eval_tau, "Matching IoU threshold");

    // --- run ------------------------------------------------------------------
    std::string run_config;
    std::string run_output;
    int run_jobs = 1;
    long run_seed = 0;
    auto* cmd_run = app.add_subcommand("run", "Full batch pipeline from a JSON config");
    cmd_run->add_option("--config", run_config, "Config (or manifest) JSON path")->required();
    cmd_run->add_option("--output", run_output, "Override the config's output directory");
    cmd_run->add_option("--jobs", run_jobs, "Worker threads");
    cmd_run->add_option("--seed", run_seed, "Reserved, currently unused");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_inspect) {
            auto bytes = slurp(inspect_input);
            ingest::ContainerIndex index = ingest::parse_container(bytes);
            json j;
            j["file_version"] = {index.file_version.first, index.file_version.second};
            j["segments"] = json::array();
            for (const auto& s : index.segments)
                j["segments"].push_back(
                    {{"id", s.id}, {"offset", s.offset}, {"used_size", s.used_size}});
            j["subblocks"] = json::array();
            for (const auto& sb : index.subblocks) {
                json dims = json::array();
                for (const auto& d : sb.dims)
                    dims.push_back({{"dim", d.tag}, {"start", d.start}, {"size", d.size}});
                j["subblocks"].push_back(
                    {{"pixel_type", sb.pixel_type == ingest::PixelType::Gray8 ? "Gray8" : "Gray16"},
                     {"channel", sb.channel_index},
                     {"width", sb.width()},
                     {"height", sb.height()},
                     {"data_offset", sb.data_offset},
                     {"data_size", sb.data_size},
                     {"dims", dims}});
            }
            std::cout << j.dump(2) << "\n";
        } else if (*cmd_extract) {
            ChannelImage image = pipeline::load_channel(extract_input, extract_marker,
                                                        mapping_from_flags(extract_map));
            spit(extract_output, ingest::write_pgm(image));
            log_info("wrote " + extract_output);
        } else if (*cmd_contours) {
            ChannelImage image = pipeline::load_channel(contours_input, contours_marker,
                                                        mapping_from_flags(contours_map));
            contours::ContourParams params;
            params.theta = contours_theta;
            params.morph_radius = contours_radius;
            params.min_area = contours_min_area;
            if (contours_fixed >= 0) params.threshold = img::Threshold::fixed(contours_fixed);
            std::cout << contour_result_json(contours::analyze_contours(image, params)).dump(2)
                      << "\n";
        } else if (*cmd_cells) {
            ChannelImage image = pipeline::load_channel(cells_input, cells_marker,
                                                        mapping_from_flags(cells_map));
            cells::CellParams params;
            params.n_rays = cells_rays;
            params.prob_thresh = cells_prob;
            params.nms_thresh = cells_nms;
            params.morph_radius = cells_radius;
            if (cells_fixed >= 0) params.threshold = img::Threshold::fixed(cells_fixed);

            cells::CellAnalysis analysis;
            if (!cells_maps_file.empty()) {
                cells::DetectionMaps maps = cells::load_maps(slurp(cells_maps_file));
                analysis = cells::analyze_cells(image, params, &maps);
            } else {
                analysis = cells::analyze_cells(image, params, nullptr);
            }

            if (!cells_save_maps.empty()) {
                ChannelImage gray8 =
                    image.bit_depth() == 16 ? img::to_8bit(image, params.to8bit_mode) : image;
                BinaryMask mask = cells::detection_mask(gray8, params);
                spit(cells_save_maps, cells::save_maps(cells::synthesize_maps(mask, params.n_rays)));
            }
            if (!cells_save_instances.empty()) {
                pipeline::InstanceFile file;
                file.width = image.width();
                file.height = image.height();
                file.n_rays = params.n_rays;
                file.instances = analysis.instances;
                spit(cells_save_instances, pipeline::write_instances_json(file));
            }

            json j;
            j["cell_count"] = analysis.stats.cell_count;
            j["per_cell_means"] = analysis.stats.per_cell_means;
            j["i_avg"] = analysis.stats.cell_count > 0 ? json(analysis.stats.i_avg) : json(nullptr);
            j["diagnostics"] = {{"threshold", analysis.diag.threshold_value},
                                {"mask_px", analysis.diag.mask_px},
                                {"candidates", analysis.diag.candidate_count}};
            std::cout << j.dump(2) << "\n";
        } else if (*cmd_report) {
            std::vector<stats::GroupRow> rows = stats::parse_table_json(slurp_text(report_rows));
            fs::create_directories(fs::path(report_output) / "charts");
            spit(fs::path(report_output) / "rows.csv",
                 stats::emit_table(rows, stats::TableFormat::CSV));
            spit(fs::path(report_output) / "rows.json",
                 stats::emit_table(rows, stats::TableFormat::JSON));

            std::vector<std::string> group_order;
            for (const auto& row : rows)
                if (std::find(group_order.begin(), group_order.end(), row.group) ==
                    group_order.end())
                    group_order.push_back(row.group);

            json summary_doc;
            summary_doc["std_mode"] = "sample";
            summary_doc["summaries"] = json::array();
            constexpr stats::Metric kMetrics[] = {stats::Metric::ContourNo, stats::Metric::CR,
                                                  stats::Metric::CellNo,
                                                  stats::Metric::AvgIntensity};
            for (stats::Metric metric : kMetrics) {
                std::vector<stats::GroupSummary> chart;
                for (const auto& g : group_order) {
                    std::vector<stats::GroupRow> group_rows;
                    for (const auto& row : rows)
                        if (row.group == g) group_rows.push_back(row);
                    try {
                        chart.push_back(stats::aggregate_group(group_rows, metric));
                    } catch (const stats::NoData&) {
                    }
                }
                for (const auto& s : chart)
                    summary_doc["summaries"].push_back({{"group", s.group},
                                                        {"metric", stats::metric_key(s.metric)},
                                                        {"n", s.n},
                                                        {"mean", s.mean},
                                                        {"std", s.std_dev},
                                                        {"excluded", s.excluded}});
                if (!chart.empty())
                    spit(fs::path(report_output) / "charts" /
                             (std::string(stats::metric_key(metric)) + ".svg"),
                         stats::emit_barchart(chart));
            }
            spit(fs::path(report_output) / "summary.json", summary_doc.dump(2) + "\n");
            log_info("wrote report under " + report_output);
        } else if (*cmd_eval) {
            pipeline::InstanceFile pred = pipeline::read_instances_json(slurp_text(eval_pred));
            pipeline::InstanceFile truth = pipeline::read_instances_json(slurp_text(eval_truth));
            cells::ApResult r = cells::average_precision(pred.instances, truth.instances, eval_tau);
            json j;
            j["tp"] = r.tp;
            j["fn"] = r.fn;
            j["fp"] = r.fp;
            j["ap"] = r.ap;
            std::cout << j.dump(2) << "\n";
        } else if (*cmd_run) {
            pipeline::PipelineConfig config;
            try {
                config = pipeline::parse_config(pipeline::unwrap_manifest(slurp_text(run_config)));
            } catch (const Error& e) {
                std::cerr << "organoquant: config error: " << e.what() << "\n";
                return 2;
            }
            if (!run_output.empty()) config.output_dir = run_output;
            pipeline::RunReport report = pipeline::run_pipeline(config, run_jobs);
            log_info("processed " + std::to_string(report.processed) + " image(s), " +
                     std::to_string(report.failed) + " failed");
            std::cout << "rows: " << report.rows.size() << "  summaries: "
                      << report.summaries.size() << "  output: "
                      << report.output_dir.string() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "organoquant: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
