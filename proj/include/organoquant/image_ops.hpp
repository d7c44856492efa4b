#pragma once

#include "organoquant/errors.hpp"
#include "organoquant/raster.hpp"

namespace organoquant::img {

ORQ_DEFINE_ERROR(WrongBitDepth)
ORQ_DEFINE_ERROR(DegenerateHistogram)

enum class To8BitMode { FullScale, MinMax };

/// Threshold selection: a fixed level in 0..255 or Otsu's method.
struct Threshold {
    enum class Kind { Fixed, Otsu };

    static Threshold fixed(int t) { return {Kind::Fixed, t}; }
    static Threshold otsu() { return {Kind::Otsu, 0}; }

    Kind kind = Kind::Otsu;
    int value = 0;

    bool operator==(const Threshold&) const = default;
};

/// Converts a 16-bit image to 8 bits. FullScale maps the full 16-bit range;
/// MinMax stretches the image's own range (constant images map to 0).
/// Rounding is half-up, bit-exact across platforms.
ChannelImage to_8bit(const ChannelImage& image, To8BitMode mode);

/// Otsu threshold over t in 0..254, maximizing between-class variance,
/// lowest t on ties. Throws DegenerateHistogram for constant (or empty) input.
int otsu_threshold(const ChannelImage& image);

/// Effective threshold level for the given method.
int resolve_threshold(const ChannelImage& image, Threshold method);

/// Foreground iff pixel > threshold. Input must be 8-bit.
BinaryMask binarize(const ChannelImage& image, Threshold method);

/// Morphological opening (erosion then dilation) with the (2r+1) x (2r+1)
/// square element; outside the image counts as background.
BinaryMask morph_open(const BinaryMask& mask, int radius);

/// 8-connected component labeling. Components smaller than min_area are
/// dropped; surviving labels are dense, in first-pixel raster-scan order.
LabelMap label_components(const BinaryMask& mask, int min_area);

}  // namespace organoquant::img
