#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace organoquant {

struct PixelCoord {
    int x = 0;
    int y = 0;

    bool operator==(const PixelCoord&) const = default;
};

/// Row-major single-channel raster, 8- or 16-bit, tagged with the marker it
/// was extracted for. Pixel values always satisfy v < 2^bit_depth.
class ChannelImage {
public:
    ChannelImage() = default;

    ChannelImage(int width, int height, int bit_depth,
                 std::vector<std::uint16_t> pixels, std::string marker = {})
        : width_(width), height_(height), bit_depth_(bit_depth),
          pixels_(std::move(pixels)), marker_(std::move(marker)) {
        if (width_ < 0 || height_ < 0)
            throw std::invalid_argument("ChannelImage: negative dimensions");
        if (bit_depth_ != 8 && bit_depth_ != 16)
            throw std::invalid_argument("ChannelImage: bit depth must be 8 or 16");
        if (pixels_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_))
            throw std::invalid_argument("ChannelImage: pixel count != width * height");
        if (bit_depth_ == 8) {
            for (std::uint16_t v : pixels_)
                if (v > 255) throw std::invalid_argument("ChannelImage: 8-bit pixel out of range");
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int bit_depth() const { return bit_depth_; }
    std::uint16_t max_value() const { return bit_depth_ == 8 ? 255 : 65535; }
    const std::string& marker() const { return marker_; }
    void set_marker(std::string m) { marker_ = std::move(m); }

    std::size_t size() const { return pixels_.size(); }
    const std::vector<std::uint16_t>& pixels() const { return pixels_; }

    std::uint16_t at(int x, int y) const {
        return pixels_[static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                       static_cast<std::size_t>(x)];
    }

    bool same_pixels(const ChannelImage& other) const {
        return width_ == other.width_ && height_ == other.height_ &&
               bit_depth_ == other.bit_depth_ && pixels_ == other.pixels_;
    }

    bool operator==(const ChannelImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int bit_depth_ = 8;
    std::vector<std::uint16_t> pixels_;
    std::string marker_;
};

/// Row-major binary foreground mask (1 = foreground).
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    std::uint8_t at(int x, int y) const {
        return bits[static_cast<std::size_t>(y) * width + x];
    }
    void set(int x, int y, bool v) {
        bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto b : bits) n += b;
        return n;
    }

    bool operator==(const BinaryMask&) const = default;
};

/// Dense 8-connected component labels; 0 is background, components are
/// numbered 1..component_count in first-pixel raster-scan order.
struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> labels;
    int component_count = 0;

    LabelMap() = default;
    LabelMap(int w, int h) : width(w), height(h), labels(static_cast<std::size_t>(w) * h, 0) {}

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    std::int32_t at(int x, int y) const {
        return labels[static_cast<std::size_t>(y) * width + x];
    }
};

}  // namespace organoquant
