#pragma once

#include <span>
#include <vector>

#include "organoquant/image_ops.hpp"
#include "organoquant/raster.hpp"
#include "organoquant/ratio.hpp"

namespace organoquant::contours {

/// Ordered outer-boundary pixel sequence of one component. Consecutive points
/// are 8-neighbors; the sequence may revisit pixels on one-pixel-wide spurs.
struct Contour {
    std::vector<PixelCoord> points;
    bool closed = false;

    /// Number of distinct boundary pixels (revisits counted once).
    long distinct_point_count() const;
};

/// Contour partition counts: n1 long contours (> theta points), n2 short
/// ones, and their ratio n2/n1 (undefined when n1 is zero).
struct ContourStats {
    long total = 0;
    long n1 = 0;
    long n2 = 0;
    long theta = 0;
    Ratio cr;

    bool operator==(const ContourStats&) const = default;
};

struct ContourParams {
    img::To8BitMode to8bit_mode = img::To8BitMode::FullScale;
    img::Threshold threshold = img::Threshold::otsu();
    int morph_radius = 1;
    int min_area = 20;
    long theta = 200;
};

/// Intermediate counts recorded while running the contour pipeline.
struct ContourDiagnostics {
    int threshold_value = 0;
    long foreground_px = 0;
    long opened_px = 0;
    int components_before_min_area = 0;
    int components = 0;
    int holes = 0;  // background regions enclosed by foreground (not traced)
    std::vector<long> point_counts;
};

struct ContourAnalysis {
    ContourStats stats;
    ContourDiagnostics diag;
};

/// Traces one outer boundary per component by Moore-neighbor following
/// (clockwise, starting at the component's first raster-scan pixel, stopping
/// when the walk state repeats per Jacob's criterion). Output is ordered by
/// component label. Hole boundaries are not traced.
std::vector<Contour> trace_boundaries(const LabelMap& labels);

/// Partitions contours by distinct point count against theta.
ContourStats contour_stats(std::span<const Contour> contour_list, long theta);

/// Full contour pipeline: 8-bit conversion (16-bit input only), threshold,
/// opening, labeling, tracing, stats.
ContourAnalysis analyze_contours(const ChannelImage& image, const ContourParams& params);

}  // namespace organoquant::contours
