#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "organoquant/errors.hpp"
#include "organoquant/ratio.hpp"

namespace organoquant::stats {

ORQ_DEFINE_ERROR(NoData)
ORQ_DEFINE_ERROR(MixedMetrics)

enum class Metric { ContourNo, CR, CellNo, AvgIntensity };

/// Column/key name of a metric ("contour_no", "cr", "cell_no",
/// "avg_intensity").
const char* metric_key(Metric metric);

/// Human-readable chart label for a metric.
const char* metric_label(Metric metric);

/// One measured image. Absent metrics stay unset; an undefined contour ratio
/// is a present-but-undefined value (rendered "inf").
struct GroupRow {
    std::string group;
    std::string image_id;
    std::optional<long> contour_total;
    std::optional<Ratio> cr;
    std::optional<long> cell_count;
    std::optional<double> avg_intensity;

    bool operator==(const GroupRow&) const = default;
};

enum class StdMode { Sample, Population };

/// Mean and standard deviation of one metric over one group's rows.
/// `excluded` counts rows carrying the metric whose value was undefined.
struct GroupSummary {
    std::string group;
    Metric metric = Metric::ContourNo;
    long n = 0;
    double mean = 0.0;
    double std_dev = 0.0;
    long excluded = 0;
};

enum class TableFormat { CSV, JSON };

/// Mean and std over the rows carrying the metric; undefined ratios are
/// excluded and counted. Sample std uses the n-1 denominator, 0 when n = 1.
GroupSummary aggregate_group(std::span<const GroupRow> rows, Metric metric,
                             StdMode std_mode = StdMode::Sample);

/// Byte-deterministic table of rows. CSV columns: group, image_id,
/// contour_no, cr, cell_no, avg_intensity; missing metrics are empty and
/// undefined ratios render as "inf". JSON mirrors the same fields.
std::string emit_table(std::span<const GroupRow> rows, TableFormat format);

/// Inverse of the JSON table emitter.
std::vector<GroupRow> parse_table_json(const std::string& text);

/// 640x480 SVG bar chart, one bar per summary, mean-proportional heights and
/// symmetric whiskers of half-length std (omitted when std is 0).
std::string emit_barchart(std::span<const GroupSummary> summaries);

/// Shortest round-trip decimal form; integral values keep a trailing ".0".
std::string format_double(double v);

}  // namespace organoquant::stats
