#include "organoquant/image_ops.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace organoquant::img {
namespace {

// floor((num + den/2) / den) for non-negative operands: round-half-up without
// floating point.
std::uint32_t div_round_half_up(std::uint64_t num2, std::uint64_t den2) {
    return static_cast<std::uint32_t>(num2 / den2);
}

void require_depth(const ChannelImage& image, int depth) {
    if (image.bit_depth() != depth)
        throw WrongBitDepth("expected " + std::to_string(depth) + "-bit image, got " +
                            std::to_string(image.bit_depth()) + "-bit");
}

// 1-D sliding min/max over each row, window 2r+1, out-of-range treated as
// `outside`. Operates on 0/1 masks.
void run_rows(const std::vector<std::uint8_t>& in, std::vector<std::uint8_t>& out,
              int w, int h, int r, bool erode) {
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* row = in.data() + static_cast<std::size_t>(y) * w;
        std::uint8_t* orow = out.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            std::uint8_t acc = erode ? 1 : 0;
            for (int dx = -r; dx <= r; ++dx) {
                int xx = x + dx;
                std::uint8_t v = (xx >= 0 && xx < w) ? row[xx] : 0;
                if (erode) acc = static_cast<std::uint8_t>(acc & v);
                else acc = static_cast<std::uint8_t>(acc | v);
            }
            orow[x] = acc;
        }
    }
}

void run_cols(const std::vector<std::uint8_t>& in, std::vector<std::uint8_t>& out,
              int w, int h, int r, bool erode) {
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            std::uint8_t acc = erode ? 1 : 0;
            for (int dy = -r; dy <= r; ++dy) {
                int yy = y + dy;
                std::uint8_t v = (yy >= 0 && yy < h)
                                     ? in[static_cast<std::size_t>(yy) * w + x]
                                     : 0;
                if (erode) acc = static_cast<std::uint8_t>(acc & v);
                else acc = static_cast<std::uint8_t>(acc | v);
            }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
}

BinaryMask morph(const BinaryMask& mask, int r, bool erode) {
    BinaryMask tmp(mask.width, mask.height);
    BinaryMask out(mask.width, mask.height);
    run_rows(mask.bits, tmp.bits, mask.width, mask.height, r, erode);
    run_cols(tmp.bits, out.bits, mask.width, mask.height, r, erode);
    return out;
}

}  // namespace

ChannelImage to_8bit(const ChannelImage& image, To8BitMode mode) {
    require_depth(image, 16);
    std::vector<std::uint16_t> out(image.size());

    if (mode == To8BitMode::FullScale) {
        for (std::size_t i = 0; i < image.size(); ++i) {
            std::uint64_t v = image.pixels()[i];
            out[i] = static_cast<std::uint16_t>(div_round_half_up(v * 510 + 65535, 131070));
        }
    } else {
        std::uint16_t lo = 65535;
        std::uint16_t hi = 0;
        for (std::uint16_t v : image.pixels()) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi <= lo) {
            std::fill(out.begin(), out.end(), 0);
        } else {
            std::uint64_t range = hi - lo;
            for (std::size_t i = 0; i < image.size(); ++i) {
                std::uint64_t v = image.pixels()[i] - lo;
                out[i] = static_cast<std::uint16_t>(
                    div_round_half_up(v * 510 + range, 2 * range));
            }
        }
    }
    return ChannelImage(image.width(), image.height(), 8, std::move(out), image.marker());
}

int otsu_threshold(const ChannelImage& image) {
    require_depth(image, 8);
    std::array<std::uint64_t, 256> hist{};
    for (std::uint16_t v : image.pixels()) ++hist[v];

    std::uint64_t total = image.size();
    std::uint64_t weighted_total = 0;
    for (int i = 0; i < 256; ++i) weighted_total += hist[i] * static_cast<std::uint64_t>(i);

    int best_t = -1;
    double best_var = -1.0;
    std::uint64_t w0 = 0;
    std::uint64_t sum0 = 0;
    for (int t = 0; t <= 254; ++t) {
        w0 += hist[t];
        sum0 += hist[t] * static_cast<std::uint64_t>(t);
        std::uint64_t w1 = total - w0;
        if (w0 == 0 || w1 == 0) continue;
        double mu0 = static_cast<double>(sum0) / static_cast<double>(w0);
        double mu1 = static_cast<double>(weighted_total - sum0) / static_cast<double>(w1);
        double var = static_cast<double>(w0) * static_cast<double>(w1) * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best_t = t;
        }
    }
    if (best_t < 0)
        throw DegenerateHistogram("all pixels share one gray level, Otsu is undefined");
    return best_t;
}

int resolve_threshold(const ChannelImage& image, Threshold method) {
    if (method.kind == Threshold::Kind::Fixed) return method.value;
    return otsu_threshold(image);
}

BinaryMask binarize(const ChannelImage& image, Threshold method) {
    require_depth(image, 8);
    int t = resolve_threshold(image, method);
    BinaryMask mask(image.width(), image.height());
    for (std::size_t i = 0; i < image.size(); ++i)
        mask.bits[i] = image.pixels()[i] > t ? 1 : 0;
    return mask;
}

BinaryMask morph_open(const BinaryMask& mask, int radius) {
    if (radius < 1) throw std::invalid_argument("morph_open: radius must be >= 1");
    return morph(morph(mask, radius, /*erode=*/true), radius, /*erode=*/false);
}

LabelMap label_components(const BinaryMask& mask, int min_area) {
    if (min_area < 0) throw std::invalid_argument("label_components: min_area must be >= 0");
    const int w = mask.width;
    const int h = mask.height;
    LabelMap map(w, h);

    std::vector<std::int32_t> raw(static_cast<std::size_t>(w) * h, 0);
    std::vector<std::int64_t> areas;  // area per raw label, label-1 indexed
    std::vector<PixelCoord> stack;

    std::int32_t next = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (!mask.bits[idx] || raw[idx]) continue;
            ++next;
            std::int64_t area = 0;
            raw[idx] = next;
            stack.push_back({x, y});
            while (!stack.empty()) {
                PixelCoord p = stack.back();
                stack.pop_back();
                ++area;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        int nx = p.x + dx;
                        int ny = p.y + dy;
                        if (!mask.in_bounds(nx, ny)) continue;
                        std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
                        if (mask.bits[nidx] && !raw[nidx]) {
                            raw[nidx] = next;
                            stack.push_back({nx, ny});
                        }
                    }
                }
            }
            areas.push_back(area);
        }
    }

    // Drop small components, re-densify surviving labels in discovery order
    // (discovery order is first-pixel raster-scan order).
    std::vector<std::int32_t> remap(static_cast<std::size_t>(next) + 1, 0);
    std::int32_t dense = 0;
    for (std::int32_t l = 1; l <= next; ++l)
        if (areas[static_cast<std::size_t>(l) - 1] >= min_area) remap[l] = ++dense;

    for (std::size_t i = 0; i < raw.size(); ++i)
        map.labels[i] = raw[i] ? remap[raw[i]] : 0;
    map.component_count = dense;
    return map;
}

}  // namespace organoquant::img
