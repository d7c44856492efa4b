#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "organoquant/errors.hpp"
#include "organoquant/raster.hpp"

namespace organoquant::ingest {

ORQ_DEFINE_ERROR(BadMagic)
ORQ_DEFINE_ERROR(BadMaxval)
ORQ_DEFINE_ERROR(TruncatedPixels)

/// Reads a binary portable graymap ("P5"). Maxval must be 255 or 65535;
/// 16-bit samples are big-endian per the portable-graymap convention.
ChannelImage read_pgm(std::span<const std::uint8_t> bytes);

/// Writes a binary portable graymap for the given image.
std::vector<std::uint8_t> write_pgm(const ChannelImage& image);

}  // namespace organoquant::ingest
