#include "organoquant/cells.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "organoquant/binary.hpp"

namespace organoquant::cells {
namespace {

constexpr char kMapsMagic[] = "ORGQMAP1";
constexpr std::uint32_t kMaxSide = 1 << 20;
constexpr std::uint64_t kMaxPixels = std::uint64_t{1} << 26;
constexpr std::uint32_t kMaxRays = 1024;

// Exact squared Euclidean distance to the nearest background pixel
// (Meijster's algorithm), with outside-the-image counting as background.
std::vector<std::int64_t> squared_edt(const BinaryMask& mask) {
    const int w = mask.width;
    const int h = mask.height;
    const std::int64_t inf = static_cast<std::int64_t>(w) + h + 1;

    // Vertical pass: distance to nearest background pixel within the column.
    std::vector<std::int64_t> g(static_cast<std::size_t>(w) * h, 0);
    for (int x = 0; x < w; ++x) {
        g[x] = mask.at(x, 0) ? inf : 0;
        for (int y = 1; y < h; ++y) {
            std::size_t i = static_cast<std::size_t>(y) * w + x;
            g[i] = mask.bits[i] ? std::min(inf, g[i - static_cast<std::size_t>(w)] + 1) : 0;
        }
        for (int y = h - 2; y >= 0; --y) {
            std::size_t i = static_cast<std::size_t>(y) * w + x;
            g[i] = std::min(g[i], g[i + static_cast<std::size_t>(w)] + 1);
        }
    }

    // Horizontal pass: lower envelope of the per-column parabolas.
    std::vector<std::int64_t> dt(static_cast<std::size_t>(w) * h, 0);
    std::vector<int> s(static_cast<std::size_t>(w), 0);
    std::vector<int> t(static_cast<std::size_t>(w), 0);
    for (int y = 0; y < h; ++y) {
        const std::int64_t* gy = g.data() + static_cast<std::size_t>(y) * w;
        auto f = [&](std::int64_t x, std::int64_t i) {
            return (x - i) * (x - i) + gy[i] * gy[i];
        };
        auto sep = [&](std::int64_t i, std::int64_t u) {
            return (u * u - i * i + gy[u] * gy[u] - gy[i] * gy[i]) / (2 * (u - i));
        };
        int q = 0;
        s[0] = 0;
        t[0] = 0;
        for (int u = 1; u < w; ++u) {
            while (q >= 0 && f(t[q], s[q]) > f(t[q], u)) --q;
            if (q < 0) {
                q = 0;
                s[0] = u;
            } else {
                std::int64_t wpos = 1 + sep(s[q], u);
                if (wpos < w) {
                    ++q;
                    s[q] = static_cast<int>(u);
                    t[q] = static_cast<int>(wpos);
                }
            }
        }
        for (int u = w - 1; u >= 0; --u) {
            dt[static_cast<std::size_t>(y) * w + u] = f(u, s[q]);
            if (u == t[q]) --q;
        }
    }

    // Outside the image is background too; the nearest outside pixel lies
    // straight across the closest border.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::int64_t border = std::min(std::min(x + 1, y + 1), std::min(w - x, h - y));
            std::size_t i = static_cast<std::size_t>(y) * w + x;
            dt[i] = std::min(dt[i], border * border);
        }
    }
    return dt;
}

struct RayTable {
    std::vector<double> dx;
    std::vector<double> dy;

    explicit RayTable(int n_rays) : dx(n_rays), dy(n_rays) {
        for (int k = 0; k < n_rays; ++k) {
            double angle = 2.0 * std::numbers::pi * k / n_rays;
            dx[static_cast<std::size_t>(k)] = std::cos(angle);
            dy[static_cast<std::size_t>(k)] = std::sin(angle);
        }
    }
};

bool bbox_disjoint(const std::array<int, 4>& a, const std::array<int, 4>& b) {
    return a[2] < b[0] || b[2] < a[0] || a[3] < b[1] || b[3] < a[1];
}

std::array<int, 4> pixel_bbox(std::span<const std::int32_t> pixels, int width) {
    std::array<int, 4> box{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(),
                           std::numeric_limits<int>::min(), std::numeric_limits<int>::min()};
    for (std::int32_t idx : pixels) {
        int x = idx % width;
        int y = idx / width;
        box[0] = std::min(box[0], x);
        box[1] = std::min(box[1], y);
        box[2] = std::max(box[2], x);
        box[3] = std::max(box[3], y);
    }
    return box;
}

}  // namespace

DetectionMaps synthesize_maps(const BinaryMask& mask, int n_rays) {
    if (n_rays < 3) throw std::invalid_argument("synthesize_maps: n_rays must be >= 3");
    const int w = mask.width;
    const int h = mask.height;
    DetectionMaps maps;
    maps.width = w;
    maps.height = h;
    maps.n_rays = n_rays;
    maps.prob.assign(static_cast<std::size_t>(w) * h, 0.0f);
    maps.dist.assign(static_cast<std::size_t>(n_rays) * w * h, 0.0f);
    if (w == 0 || h == 0) return maps;

    LabelMap labels = img::label_components(mask, 0);
    if (labels.component_count == 0) return maps;

    std::vector<std::int64_t> sq = squared_edt(mask);
    std::vector<double> comp_max(static_cast<std::size_t>(labels.component_count) + 1, 0.0);
    std::vector<double> edt(sq.size(), 0.0);
    for (std::size_t i = 0; i < sq.size(); ++i) {
        if (!labels.labels[i]) continue;
        edt[i] = std::sqrt(static_cast<double>(sq[i]));
        auto l = static_cast<std::size_t>(labels.labels[i]);
        comp_max[l] = std::max(comp_max[l], edt[i]);
    }

    RayTable rays(n_rays);
    const int max_steps = w + h + 4;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * w + x;
            std::int32_t label = labels.labels[i];
            if (!label) continue;
            maps.prob[i] =
                static_cast<float>(edt[i] / comp_max[static_cast<std::size_t>(label)]);
            for (int k = 0; k < n_rays; ++k) {
                int steps = 0;
                for (int step = 1; step <= max_steps; ++step) {
                    int px = static_cast<int>(std::llround(x + step * rays.dx[k]));
                    int py = static_cast<int>(std::llround(y + step * rays.dy[k]));
                    if (!labels.in_bounds(px, py) || labels.at(px, py) != label) break;
                    steps = step;
                }
                maps.dist[(static_cast<std::size_t>(k) * h + y) * w + x] =
                    static_cast<float>(steps);
            }
        }
    }
    return maps;
}

std::vector<std::uint8_t> save_maps(const DetectionMaps& maps) {
    bin::Writer w;
    w.ascii(kMapsMagic);
    w.u32le(static_cast<std::uint32_t>(maps.width));
    w.u32le(static_cast<std::uint32_t>(maps.height));
    w.u32le(static_cast<std::uint32_t>(maps.n_rays));
    for (float v : maps.prob) w.f32le(v);
    for (float v : maps.dist) w.f32le(v);
    return std::move(w.buffer());
}

DetectionMaps load_maps(std::span<const std::uint8_t> bytes) {
    try {
        bin::Reader r(bytes);
        if (r.ascii(8) != kMapsMagic)
            throw BadMagic("input does not start with the ORGQMAP1 magic");
        std::uint32_t w = r.u32le();
        std::uint32_t h = r.u32le();
        std::uint32_t k = r.u32le();
        if (w < 1 || h < 1 || w > kMaxSide || h > kMaxSide ||
            static_cast<std::uint64_t>(w) * h > kMaxPixels)
            throw DimensionOverflow("map dimensions " + std::to_string(w) + "x" +
                                    std::to_string(h) + " out of supported range");
        if (k < 3 || k > kMaxRays)
            throw DimensionOverflow("ray count " + std::to_string(k) +
                                    " out of supported range [3, 1024]");

        DetectionMaps maps;
        maps.width = static_cast<int>(w);
        maps.height = static_cast<int>(h);
        maps.n_rays = static_cast<int>(k);
        std::size_t plane = static_cast<std::size_t>(w) * h;
        maps.prob.resize(plane);
        maps.dist.resize(plane * k);
        for (auto& v : maps.prob) {
            v = r.f32le();
            if (!(v >= 0.0f && v <= 1.0f))
                throw ValueOutOfRange("probability " + std::to_string(v) +
                                      " outside [0, 1]");
        }
        for (auto& v : maps.dist) {
            v = r.f32le();
            if (!std::isfinite(v) || v < 0.0f)
                throw ValueOutOfRange("radial distance " + std::to_string(v) +
                                      " is negative or not finite");
        }
        return maps;
    } catch (const std::out_of_range&) {
        throw TruncatedPayload("map payload shorter than header declares");
    }
}

std::vector<PolygonCandidate> extract_candidates(const DetectionMaps& maps,
                                                 double prob_thresh) {
    if (prob_thresh < 0.0 || prob_thresh > 1.0)
        throw std::invalid_argument("extract_candidates: prob_thresh must be in [0, 1]");
    const int w = maps.width;
    const int h = maps.height;
    std::vector<PolygonCandidate> out;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float p = maps.prob_at(x, y);
            if (static_cast<double>(p) <= prob_thresh) continue;
            PolygonCandidate c;
            c.center = {x, y};
            c.score = p;
            c.radii.resize(static_cast<std::size_t>(maps.n_rays));
            for (int k = 0; k < maps.n_rays; ++k)
                c.radii[static_cast<std::size_t>(k)] = maps.dist_at(k, x, y);
            out.push_back(std::move(c));
        }
    }
    std::sort(out.begin(), out.end(), [w](const PolygonCandidate& a, const PolygonCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return static_cast<long>(a.center.y) * w + a.center.x <
               static_cast<long>(b.center.y) * w + b.center.x;
    });
    return out;
}

std::vector<std::int32_t> rasterize_polygon(const PolygonCandidate& candidate,
                                            int width, int height) {
    const std::size_t n = candidate.radii.size();
    std::vector<double> vx(n);
    std::vector<double> vy(n);
    double min_x = candidate.center.x;
    double max_x = candidate.center.x;
    double min_y = candidate.center.y;
    double max_y = candidate.center.y;
    for (std::size_t k = 0; k < n; ++k) {
        double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        vx[k] = candidate.center.x + candidate.radii[k] * std::cos(angle);
        vy[k] = candidate.center.y + candidate.radii[k] * std::sin(angle);
        min_x = std::min(min_x, vx[k]);
        max_x = std::max(max_x, vx[k]);
        min_y = std::min(min_y, vy[k]);
        max_y = std::max(max_y, vy[k]);
    }

    int x0 = std::max(0, static_cast<int>(std::floor(min_x)));
    int x1 = std::min(width - 1, static_cast<int>(std::ceil(max_x)));
    int y0 = std::max(0, static_cast<int>(std::floor(min_y)));
    int y1 = std::min(height - 1, static_cast<int>(std::ceil(max_y)));

    std::vector<std::int32_t> out;
    for (int py = y0; py <= y1; ++py) {
        for (int px = x0; px <= x1; ++px) {
            bool inside = false;
            bool on_vertex = false;
            for (std::size_t k = 0; k < n && !on_vertex; ++k) {
                std::size_t j = (k + 1) % n;
                if (vx[k] == px && vy[k] == py) {
                    on_vertex = true;
                    break;
                }
                if ((vy[k] > py) != (vy[j] > py)) {
                    double x_cross = vx[k] + (py - vy[k]) * (vx[j] - vx[k]) / (vy[j] - vy[k]);
                    if (px < x_cross) inside = !inside;
                }
            }
            if (inside || on_vertex)
                out.push_back(static_cast<std::int32_t>(py) * width + px);
        }
    }
    return out;  // already sorted: row-major scan order
}

double pixel_iou(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
    std::size_t i = 0;
    std::size_t j = 0;
    std::size_t inter = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<CellInstance> polygon_nms(std::span<const PolygonCandidate> candidates,
                                      double overlap_thresh, int width, int height) {
    std::vector<CellInstance> accepted;
    std::vector<std::array<int, 4>> boxes;
    for (const auto& cand : candidates) {
        std::vector<std::int32_t> pixels = rasterize_polygon(cand, width, height);
        if (pixels.empty()) continue;  // fully outside the image
        std::array<int, 4> box = pixel_bbox(pixels, width);
        bool keep = true;
        for (std::size_t a = 0; a < accepted.size() && keep; ++a) {
            if (bbox_disjoint(box, boxes[a])) continue;
            if (pixel_iou(pixels, accepted[a].pixels) > overlap_thresh) keep = false;
        }
        if (!keep) continue;
        CellInstance inst;
        inst.id = static_cast<int>(accepted.size()) + 1;
        inst.candidate = cand;
        inst.pixels = std::move(pixels);
        accepted.push_back(std::move(inst));
        boxes.push_back(box);
    }
    return accepted;
}

CellStats measure_intensity(std::vector<CellInstance>& instances, const ChannelImage& image,
                            IntensityMode mode) {
    if (image.bit_depth() != 8)
        throw img::WrongBitDepth("measure_intensity expects an 8-bit image");
    if (instances.empty())
        throw EmptyInstanceSet("no cell instances to measure");

    CellStats stats;
    stats.cell_count = static_cast<long>(instances.size());
    double aggregate = 0.0;
    for (auto& inst : instances) {
        double sum = 0.0;
        for (std::int32_t idx : inst.pixels)
            sum += image.pixels()[static_cast<std::size_t>(idx)];
        inst.mean_intensity = sum / static_cast<double>(inst.pixels.size());
        stats.per_cell_means.push_back(inst.mean_intensity);
        aggregate += mode == IntensityMode::PerCellMean ? inst.mean_intensity : sum;
    }
    stats.i_avg = aggregate / static_cast<double>(stats.cell_count);
    return stats;
}

std::vector<double> normalize_intensities(std::span<const double> values) {
    if (values.empty())
        throw std::invalid_argument("normalize_intensities: need at least one value");
    double lo = values[0];
    double hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<double> out(values.size(), 0.0);
    if (hi > lo) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out[i] = (values[i] - lo) * 100.0 / (hi - lo);
    }
    return out;
}

ApResult average_precision(std::span<const CellInstance> predicted,
                           std::span<const CellInstance> truth, double iou_tau) {
    if (!(iou_tau > 0.0 && iou_tau <= 1.0))
        throw std::invalid_argument("average_precision: tau must be in (0, 1]");

    std::vector<std::size_t> order(predicted.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (predicted[a].candidate.score != predicted[b].candidate.score)
            return predicted[a].candidate.score > predicted[b].candidate.score;
        return predicted[a].id < predicted[b].id;
    });

    std::vector<bool> truth_matched(truth.size(), false);
    ApResult result;
    for (std::size_t pi : order) {
        double best_iou = 0.0;
        std::size_t best_t = truth.size();
        for (std::size_t t = 0; t < truth.size(); ++t) {
            if (truth_matched[t]) continue;
            double iou = pixel_iou(predicted[pi].pixels, truth[t].pixels);
            if (iou > best_iou) {
                best_iou = iou;
                best_t = t;
            }
        }
        if (best_t < truth.size() && best_iou >= iou_tau) {
            truth_matched[best_t] = true;
            ++result.tp;
        } else {
            ++result.fp;
        }
    }
    for (bool m : truth_matched)
        if (!m) ++result.fn;

    long denom = result.tp + result.fn + result.fp;
    result.ap = denom == 0 ? 1.0 : static_cast<double>(result.tp) / static_cast<double>(denom);
    return result;
}

BinaryMask detection_mask(const ChannelImage& image8, const CellParams& params,
                          int* threshold_used) {
    int threshold = params.threshold.value;
    if (params.threshold.kind == img::Threshold::Kind::Otsu) {
        // Constant images have no Otsu threshold; thresholding at the constant
        // yields the empty mask.
        try {
            threshold = img::otsu_threshold(image8);
        } catch (const img::DegenerateHistogram&) {
            threshold = image8.size() ? image8.pixels()[0] : 255;
        }
    }
    if (threshold_used) *threshold_used = threshold;
    BinaryMask mask = img::binarize(image8, img::Threshold::fixed(threshold));
    return img::morph_open(mask, params.morph_radius);
}

CellAnalysis analyze_cells(const ChannelImage& image, const CellParams& params,
                           const DetectionMaps* external_maps) {
    ChannelImage gray8 =
        image.bit_depth() == 16 ? img::to_8bit(image, params.to8bit_mode) : image;

    CellAnalysis out;
    DetectionMaps synthesized;
    const DetectionMaps* maps = external_maps;
    if (maps) {
        if (maps->width != gray8.width() || maps->height != gray8.height())
            throw Error("external maps are " + std::to_string(maps->width) + "x" +
                        std::to_string(maps->height) + " but the image is " +
                        std::to_string(gray8.width()) + "x" + std::to_string(gray8.height()));
    } else {
        BinaryMask mask = detection_mask(gray8, params, &out.diag.threshold_value);
        out.diag.mask_px = static_cast<long>(mask.count());
        synthesized = synthesize_maps(mask, params.n_rays);
        maps = &synthesized;
    }

    std::vector<PolygonCandidate> candidates = extract_candidates(*maps, params.prob_thresh);
    out.diag.candidate_count = static_cast<long>(candidates.size());
    out.instances = polygon_nms(candidates, params.nms_thresh, gray8.width(), gray8.height());

    if (!out.instances.empty()) {
        out.stats = measure_intensity(out.instances, gray8);
    } else {
        out.stats.cell_count = 0;
    }
    return out;
}

}  // namespace organoquant::cells
