#include "organoquant/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace organoquant::stats {
namespace {

std::optional<double> metric_value(const GroupRow& row, Metric metric, bool& undefined) {
    undefined = false;
    switch (metric) {
        case Metric::ContourNo:
            if (row.contour_total) return static_cast<double>(*row.contour_total);
            return std::nullopt;
        case Metric::CR:
            if (!row.cr) return std::nullopt;
            if (!row.cr->defined()) {
                undefined = true;
                return std::nullopt;
            }
            return row.cr->value();
        case Metric::CellNo:
            if (row.cell_count) return static_cast<double>(*row.cell_count);
            return std::nullopt;
        case Metric::AvgIntensity:
            return row.avg_intensity;
    }
    return std::nullopt;
}

std::string xml_escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

nlohmann::json row_to_json(const GroupRow& row) {
    nlohmann::json j;
    j["group"] = row.group;
    j["image_id"] = row.image_id;
    j["contour_no"] = row.contour_total ? nlohmann::json(*row.contour_total)
                                        : nlohmann::json(nullptr);
    if (!row.cr) j["cr"] = nullptr;
    else if (!row.cr->defined()) j["cr"] = "inf";
    else j["cr"] = row.cr->value();
    j["cell_no"] = row.cell_count ? nlohmann::json(*row.cell_count)
                                  : nlohmann::json(nullptr);
    j["avg_intensity"] = row.avg_intensity ? nlohmann::json(*row.avg_intensity)
                                           : nlohmann::json(nullptr);
    return j;
}

GroupRow row_from_json(const nlohmann::json& j) {
    GroupRow row;
    row.group = j.at("group").get<std::string>();
    row.image_id = j.at("image_id").get<std::string>();
    if (j.contains("contour_no") && !j["contour_no"].is_null())
        row.contour_total = j["contour_no"].get<long>();
    if (j.contains("cr") && !j["cr"].is_null()) {
        if (j["cr"].is_string()) {
            if (j["cr"].get<std::string>() != "inf")
                throw std::invalid_argument("cr must be a number, null, or \"inf\"");
            row.cr = Ratio::undefined();
        } else {
            row.cr = Ratio::of(j["cr"].get<double>());
        }
    }
    if (j.contains("cell_no") && !j["cell_no"].is_null())
        row.cell_count = j["cell_no"].get<long>();
    if (j.contains("avg_intensity") && !j["avg_intensity"].is_null())
        row.avg_intensity = j["avg_intensity"].get<double>();
    return row;
}

}  // namespace

const char* metric_key(Metric metric) {
    switch (metric) {
        case Metric::ContourNo: return "contour_no";
        case Metric::CR: return "cr";
        case Metric::CellNo: return "cell_no";
        case Metric::AvgIntensity: return "avg_intensity";
    }
    return "";
}

const char* metric_label(Metric metric) {
    switch (metric) {
        case Metric::ContourNo: return "Contour count";
        case Metric::CR: return "Contour ratio";
        case Metric::CellNo: return "Cell count";
        case Metric::AvgIntensity: return "Average cell intensity";
    }
    return "";
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, end);
    if (s.find_first_of(".einf") == std::string::npos) s += ".0";
    return s;
}

GroupSummary aggregate_group(std::span<const GroupRow> rows, Metric metric, StdMode std_mode) {
    GroupSummary summary;
    summary.metric = metric;
    if (!rows.empty()) summary.group = rows[0].group;

    // Welford's running mean/variance.
    double mean = 0.0;
    double m2 = 0.0;
    long n = 0;
    for (const auto& row : rows) {
        bool undefined = false;
        auto v = metric_value(row, metric, undefined);
        if (undefined) {
            ++summary.excluded;
            continue;
        }
        if (!v) continue;
        ++n;
        double delta = *v - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (*v - mean);
    }
    if (n == 0)
        throw NoData(std::string("no row carries metric ") + metric_key(metric));

    summary.n = n;
    summary.mean = mean;
    if (n == 1) {
        summary.std_dev = 0.0;
    } else {
        long denom = std_mode == StdMode::Sample ? n - 1 : n;
        summary.std_dev = std::sqrt(m2 / static_cast<double>(denom));
    }
    return summary;
}

std::string emit_table(std::span<const GroupRow> rows, TableFormat format) {
    if (format == TableFormat::CSV) {
        std::string out = "group,image_id,contour_no,cr,cell_no,avg_intensity\n";
        for (const auto& row : rows) {
            out += csv_quote(row.group);
            out += ',';
            out += csv_quote(row.image_id);
            out += ',';
            if (row.contour_total) out += std::to_string(*row.contour_total);
            out += ',';
            if (row.cr) out += row.cr->defined() ? format_double(row.cr->value()) : "inf";
            out += ',';
            if (row.cell_count) out += std::to_string(*row.cell_count);
            out += ',';
            if (row.avg_intensity) out += format_double(*row.avg_intensity);
            out += '\n';
        }
        return out;
    }

    nlohmann::json doc;
    doc["rows"] = nlohmann::json::array();
    for (const auto& row : rows) doc["rows"].push_back(row_to_json(row));
    return doc.dump(2) + "\n";
}

std::vector<GroupRow> parse_table_json(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    std::vector<GroupRow> rows;
    for (const auto& j : doc.at("rows")) rows.push_back(row_from_json(j));
    return rows;
}

std::string emit_barchart(std::span<const GroupSummary> summaries) {
    if (summaries.empty()) throw NoData("bar chart needs at least one summary");
    if (summaries.size() > 8)
        throw std::invalid_argument("bar chart supports at most 8 groups");
    for (const auto& s : summaries) {
        if (s.metric != summaries[0].metric)
            throw MixedMetrics("bar chart summaries must share one metric");
    }

    constexpr double view_w = 640.0;
    constexpr double view_h = 480.0;
    constexpr double margin_left = 70.0;
    constexpr double margin_right = 20.0;
    constexpr double margin_top = 40.0;
    constexpr double margin_bottom = 50.0;
    const double plot_w = view_w - margin_left - margin_right;
    const double plot_h = view_h - margin_top - margin_bottom;
    const double baseline = view_h - margin_bottom;

    double y_max = 0.0;
    for (const auto& s : summaries) y_max = std::max(y_max, s.mean + s.std_dev);
    if (y_max <= 0.0) y_max = 1.0;

    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", v);
        return std::string(buf);
    };

    const auto count = static_cast<double>(summaries.size());
    const double slot_w = plot_w / count;
    const double bar_w = slot_w * 0.5;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"640\" "
           "height=\"480\" viewBox=\"0 0 640 480\">\n";
    svg += "  <rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";
    svg += "  <text x=\"320\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
           "text-anchor=\"middle\">" +
           std::string(metric_label(summaries[0].metric)) + "</text>\n";
    // Axes.
    svg += "  <line x1=\"" + fmt(margin_left) + "\" y1=\"" + fmt(margin_top) + "\" x2=\"" +
           fmt(margin_left) + "\" y2=\"" + fmt(baseline) + "\" stroke=\"black\"/>\n";
    svg += "  <line x1=\"" + fmt(margin_left) + "\" y1=\"" + fmt(baseline) + "\" x2=\"" +
           fmt(view_w - margin_right) + "\" y2=\"" + fmt(baseline) + "\" stroke=\"black\"/>\n";
    svg += "  <text x=\"" + fmt(margin_left - 8) + "\" y=\"" + fmt(margin_top + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" +
           format_double(y_max) + "</text>\n";
    svg += "  <text x=\"" + fmt(margin_left - 8) + "\" y=\"" + fmt(baseline + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">0</text>\n";

    static const char* kFills[8] = {"#4472c4", "#ed7d31", "#a5a5a5", "#ffc000",
                                    "#5b9bd5", "#70ad47", "#264478", "#9e480e"};
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        const auto& s = summaries[i];
        double cx = margin_left + (static_cast<double>(i) + 0.5) * slot_w;
        double bar_h = s.mean / y_max * plot_h;
        double bar_x = cx - bar_w / 2.0;
        double bar_y = baseline - bar_h;
        svg += "  <rect x=\"" + fmt(bar_x) + "\" y=\"" + fmt(bar_y) + "\" width=\"" +
               fmt(bar_w) + "\" height=\"" + fmt(bar_h) + "\" fill=\"" + kFills[i] + "\"/>\n";
        if (s.std_dev > 0.0) {
            double whisker = s.std_dev / y_max * plot_h;
            double y_lo = bar_y + whisker;
            double y_hi = bar_y - whisker;
            double cap = bar_w * 0.25;
            svg += "  <line x1=\"" + fmt(cx) + "\" y1=\"" + fmt(y_lo) + "\" x2=\"" + fmt(cx) +
                   "\" y2=\"" + fmt(y_hi) + "\" stroke=\"black\"/>\n";
            svg += "  <line x1=\"" + fmt(cx - cap) + "\" y1=\"" + fmt(y_hi) + "\" x2=\"" +
                   fmt(cx + cap) + "\" y2=\"" + fmt(y_hi) + "\" stroke=\"black\"/>\n";
            svg += "  <line x1=\"" + fmt(cx - cap) + "\" y1=\"" + fmt(y_lo) + "\" x2=\"" +
                   fmt(cx + cap) + "\" y2=\"" + fmt(y_lo) + "\" stroke=\"black\"/>\n";
        }
        svg += "  <text x=\"" + fmt(cx) + "\" y=\"" + fmt(baseline + 18) +
               "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" +
               xml_escape(s.group) + "</text>\n";
        svg += "  <text x=\"" + fmt(cx) + "\" y=\"" + fmt(baseline + 34) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
               format_double(s.mean) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace organoquant::stats
