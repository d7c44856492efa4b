#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "organoquant/errors.hpp"
#include "organoquant/image_ops.hpp"
#include "organoquant/raster.hpp"

namespace organoquant::cells {

ORQ_DEFINE_ERROR(BadMagic)
ORQ_DEFINE_ERROR(DimensionOverflow)
ORQ_DEFINE_ERROR(TruncatedPayload)
ORQ_DEFINE_ERROR(ValueOutOfRange)
ORQ_DEFINE_ERROR(EmptyInstanceSet)

/// Per-pixel object probability and K radial distances; ray k points at angle
/// 2*pi*k/K from the +x axis (y down). Distance planes are ray-major.
struct DetectionMaps {
    int width = 0;
    int height = 0;
    int n_rays = 0;
    std::vector<float> prob;  // width * height
    std::vector<float> dist;  // n_rays * width * height

    float prob_at(int x, int y) const {
        return prob[static_cast<std::size_t>(y) * width + x];
    }
    float dist_at(int ray, int x, int y) const {
        return dist[(static_cast<std::size_t>(ray) * height + y) * width + x];
    }
};

/// Star-convex polygon candidate: vertices at center + radii[k] along ray k.
struct PolygonCandidate {
    PixelCoord center;
    float score = 0.0f;
    std::vector<float> radii;
};

/// Accepted detection with its rasterized pixel set (sorted row-major
/// indices, in-bounds only) and the mean image intensity over those pixels.
struct CellInstance {
    int id = 0;
    PolygonCandidate candidate;
    std::vector<std::int32_t> pixels;
    double mean_intensity = 0.0;
};

enum class IntensityMode {
    PerCellMean,  // average of per-cell means
    SumOverCount  // per-cell pixel sums averaged over the cell count
};

/// Per-image intensity aggregate: N cells, their means, and the average.
struct CellStats {
    long cell_count = 0;
    std::vector<double> per_cell_means;
    double i_avg = 0.0;
    std::optional<std::vector<double>> normalized;
};

/// Instance-matching counts and the score tp / (tp + fn + fp).
struct ApResult {
    long tp = 0;
    long fn = 0;
    long fp = 0;
    double ap = 0.0;
};

/// Deterministic classical stand-in for network predictions: per-pixel
/// Euclidean distance-to-background normalized per component as the object
/// probability, and unit-step ray marching for the radial distances.
DetectionMaps synthesize_maps(const BinaryMask& mask, int n_rays);

/// ORGQMAP1 codec for externally computed prediction maps.
DetectionMaps load_maps(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> save_maps(const DetectionMaps& maps);

/// One candidate per pixel with prob > prob_thresh, highest score first
/// (ties by raster-scan order of the center).
std::vector<PolygonCandidate> extract_candidates(const DetectionMaps& maps, double prob_thresh);

/// Pixels whose centers lie inside the polygon under the even-odd rule;
/// vertices at exact pixel centers count as inside. Clipped to the image.
std::vector<std::int32_t> rasterize_polygon(const PolygonCandidate& candidate,
                                            int width, int height);

/// IoU of two sorted pixel-index sets.
double pixel_iou(std::span<const std::int32_t> a, std::span<const std::int32_t> b);

/// Greedy non-maximum suppression over rasterized polygons: accept the best
/// remaining candidate, drop everything overlapping any accepted instance by
/// more than overlap_thresh. Instance ids are dense in acceptance order.
std::vector<CellInstance> polygon_nms(std::span<const PolygonCandidate> candidates,
                                      double overlap_thresh, int width, int height);

/// Fills per-instance mean intensities and aggregates them. Image must be
/// 8-bit. Throws EmptyInstanceSet when there are no instances.
CellStats measure_intensity(std::vector<CellInstance>& instances, const ChannelImage& image,
                            IntensityMode mode = IntensityMode::PerCellMean);

/// Affine rescale sending the batch minimum to 0 and maximum to 100;
/// constant batches map to 0.
std::vector<double> normalize_intensities(std::span<const double> values);

/// Greedy instance matching in descending prediction-score order at IoU
/// threshold tau; both sets empty scores 1.
ApResult average_precision(std::span<const CellInstance> predicted,
                           std::span<const CellInstance> truth, double iou_tau);

struct CellParams {
    img::To8BitMode to8bit_mode = img::To8BitMode::FullScale;
    img::Threshold threshold = img::Threshold::otsu();
    int morph_radius = 1;
    int n_rays = 32;
    double prob_thresh = 0.5;
    double nms_thresh = 0.4;
};

struct CellDiagnostics {
    int threshold_value = 0;
    long mask_px = 0;
    long candidate_count = 0;
};

struct CellAnalysis {
    CellStats stats;
    std::vector<CellInstance> instances;
    CellDiagnostics diag;
};

/// Thresholded and opened foreground mask the synthesized maps are built
/// from. Constant images (no Otsu threshold) yield the empty mask. Returns
/// the effective threshold through `threshold_used` when given.
BinaryMask detection_mask(const ChannelImage& image8, const CellParams& params,
                          int* threshold_used = nullptr);

/// Full cell pipeline on one channel: 8-bit conversion (16-bit input only),
/// detection maps (synthesized unless external maps are supplied), candidate
/// extraction, suppression, intensity measurement. Zero detections yield an
/// empty instance list and cell_count 0 rather than an error.
CellAnalysis analyze_cells(const ChannelImage& image, const CellParams& params,
                           const DetectionMaps* external_maps = nullptr);

}  // namespace organoquant::cells
