#include "organoquant/contours.hpp"

#include <algorithm>
#include <stdexcept>

namespace organoquant::contours {
namespace {

// Moore neighborhood, clockwise with y pointing down, starting north.
constexpr int kDx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr int kDy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr int kWest = 6;

int direction_of(int dx, int dy) {
    for (int d = 0; d < 8; ++d)
        if (kDx[d] == dx && kDy[d] == dy) return d;
    throw std::logic_error("direction_of: not a neighbor offset");
}

Contour trace_component(const LabelMap& map, std::int32_t label, PixelCoord start,
                        std::vector<std::int32_t>& visited_state) {
    const int w = map.width;
    auto is_fg = [&](int x, int y) { return map.in_bounds(x, y) && map.at(x, y) == label; };
    auto state_index = [&](PixelCoord p, int dir) {
        return (static_cast<std::size_t>(p.y) * w + p.x) * 8 + static_cast<std::size_t>(dir);
    };

    Contour contour;
    contour.points.push_back(start);

    PixelCoord current = start;
    int backtrack = kWest;  // first raster-scan pixel: the cell to its west is background
    visited_state[state_index(current, backtrack)] = label;

    for (;;) {
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
            int dir = (backtrack + k) % 8;
            if (is_fg(current.x + kDx[dir], current.y + kDy[dir])) {
                found = dir;
                break;
            }
        }
        if (found < 0) break;  // isolated pixel

        int prev_dir = (found + 7) % 8;  // scanned cell just before the hit; background
        PixelCoord prev{current.x + kDx[prev_dir], current.y + kDy[prev_dir]};
        PixelCoord next{current.x + kDx[found], current.y + kDy[found]};
        int next_backtrack = direction_of(prev.x - next.x, prev.y - next.y);

        std::size_t state = state_index(next, next_backtrack);
        if (visited_state[state] == label) break;  // walk state repeats: boundary closed
        visited_state[state] = label;
        contour.points.push_back(next);
        current = next;
        backtrack = next_backtrack;
    }

    while (contour.points.size() > 1 && contour.points.back() == contour.points.front())
        contour.points.pop_back();

    if (contour.points.size() > 1) {
        PixelCoord a = contour.points.front();
        PixelCoord b = contour.points.back();
        contour.closed = std::abs(a.x - b.x) <= 1 && std::abs(a.y - b.y) <= 1;
    }
    return contour;
}

// Background regions (4-connected) that do not touch the image border.
int count_holes(const BinaryMask& mask) {
    const int w = mask.width;
    const int h = mask.height;
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
    std::vector<PixelCoord> stack;
    int holes = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (mask.bits[idx] || seen[idx]) continue;
            bool touches_border = false;
            seen[idx] = 1;
            stack.push_back({x, y});
            while (!stack.empty()) {
                PixelCoord p = stack.back();
                stack.pop_back();
                if (p.x == 0 || p.y == 0 || p.x == w - 1 || p.y == h - 1)
                    touches_border = true;
                constexpr int dx4[4] = {1, -1, 0, 0};
                constexpr int dy4[4] = {0, 0, 1, -1};
                for (int d = 0; d < 4; ++d) {
                    int nx = p.x + dx4[d];
                    int ny = p.y + dy4[d];
                    if (!mask.in_bounds(nx, ny)) continue;
                    std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
                    if (!mask.bits[nidx] && !seen[nidx]) {
                        seen[nidx] = 1;
                        stack.push_back({nx, ny});
                    }
                }
            }
            if (!touches_border) ++holes;
        }
    }
    return holes;
}

}  // namespace

long Contour::distinct_point_count() const {
    std::vector<std::pair<int, int>> pts;
    pts.reserve(points.size());
    for (const auto& p : points) pts.emplace_back(p.x, p.y);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return static_cast<long>(pts.size());
}

std::vector<Contour> trace_boundaries(const LabelMap& map) {
    std::vector<Contour> out;
    if (map.width <= 0 || map.height <= 0 || map.component_count == 0) return out;

    // First raster-scan pixel of each component.
    std::vector<PixelCoord> starts(static_cast<std::size_t>(map.component_count), {-1, -1});
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            std::int32_t l = map.at(x, y);
            if (l > 0 && starts[static_cast<std::size_t>(l) - 1].x < 0)
                starts[static_cast<std::size_t>(l) - 1] = {x, y};
        }
    }

    std::vector<std::int32_t> visited_state(
        static_cast<std::size_t>(map.width) * map.height * 8, 0);
    out.reserve(starts.size());
    for (std::int32_t l = 1; l <= map.component_count; ++l)
        out.push_back(trace_component(map, l, starts[static_cast<std::size_t>(l) - 1],
                                      visited_state));
    return out;
}

ContourStats contour_stats(std::span<const Contour> contour_list, long theta) {
    if (theta < 1) throw std::invalid_argument("contour_stats: theta must be >= 1");
    ContourStats stats;
    stats.theta = theta;
    stats.total = static_cast<long>(contour_list.size());
    for (const auto& c : contour_list) {
        if (c.distinct_point_count() > theta) ++stats.n1;
        else ++stats.n2;
    }
    stats.cr = stats.n1 > 0
                   ? Ratio::of(static_cast<double>(stats.n2) / static_cast<double>(stats.n1))
                   : Ratio::undefined();
    return stats;
}

ContourAnalysis analyze_contours(const ChannelImage& image, const ContourParams& params) {
    ChannelImage gray8 =
        image.bit_depth() == 16 ? img::to_8bit(image, params.to8bit_mode) : image;

    ContourAnalysis out;
    if (params.threshold.kind == img::Threshold::Kind::Otsu) {
        // Constant images have no Otsu threshold; thresholding at the constant
        // itself yields the empty mask, which is the right degenerate answer.
        try {
            out.diag.threshold_value = img::otsu_threshold(gray8);
        } catch (const img::DegenerateHistogram&) {
            out.diag.threshold_value = gray8.size() ? gray8.pixels()[0] : 255;
        }
    } else {
        out.diag.threshold_value = params.threshold.value;
    }
    BinaryMask mask = img::binarize(gray8, img::Threshold::fixed(out.diag.threshold_value));
    out.diag.foreground_px = static_cast<long>(mask.count());

    BinaryMask opened = img::morph_open(mask, params.morph_radius);
    out.diag.opened_px = static_cast<long>(opened.count());
    out.diag.holes = count_holes(opened);

    out.diag.components_before_min_area = img::label_components(opened, 0).component_count;
    LabelMap labels = img::label_components(opened, params.min_area);
    out.diag.components = labels.component_count;

    std::vector<Contour> traced = trace_boundaries(labels);
    for (const auto& c : traced) out.diag.point_counts.push_back(c.distinct_point_count());
    out.stats = contour_stats(traced, params.theta);
    return out;
}

}  // namespace organoquant::contours
