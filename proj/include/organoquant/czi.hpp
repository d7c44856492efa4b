#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "organoquant/errors.hpp"
#include "organoquant/raster.hpp"

namespace organoquant::ingest {

ORQ_DEFINE_ERROR(MalformedHeader)
ORQ_DEFINE_ERROR(TruncatedFile)
ORQ_DEFINE_ERROR(UnsupportedPixelType)
ORQ_DEFINE_ERROR(UnsupportedCompression)
ORQ_DEFINE_ERROR(UnsupportedDimension)
ORQ_DEFINE_ERROR(UnknownMarker)
ORQ_DEFINE_ERROR(MissingChannel)
ORQ_DEFINE_ERROR(EmptyInput)
ORQ_DEFINE_ERROR(DimensionMismatch)
ORQ_DEFINE_ERROR(ZeroDimension)

enum class PixelType { Gray8, Gray16 };

struct DimensionEntry {
    std::string tag;      // single ASCII char in practice ("X", "Y", "C", ...)
    std::int32_t start = 0;
    std::int32_t size = 0;
};

struct SubblockEntry {
    PixelType pixel_type = PixelType::Gray8;
    std::vector<DimensionEntry> dims;
    int channel_index = 0;
    std::uint64_t data_offset = 0;  // absolute offset of the pixel payload
    std::uint64_t data_size = 0;

    int width() const;
    int height() const;
    int bytes_per_pixel() const { return pixel_type == PixelType::Gray8 ? 1 : 2; }
};

struct SegmentRecord {
    std::string id;               // trimmed ASCII tag
    std::uint64_t offset = 0;     // absolute offset of the segment payload
    std::uint64_t used_size = 0;
};

struct ContainerIndex {
    std::pair<std::int32_t, std::int32_t> file_version{0, 0};
    std::vector<SegmentRecord> segments;
    std::vector<SubblockEntry> subblocks;
};

/// Marker name -> channel index, supplied by run configuration. There is no
/// default ordering; callers must provide the mapping explicitly.
using MarkerMap = std::map<std::string, int>;

/// Indexes a ZISRAW container held in memory. Only uncompressed Gray8/Gray16
/// subblocks over X/Y/C dimensions are accepted; unknown segment tags are
/// recorded and skipped by their declared size.
ContainerIndex parse_container(std::span<const std::uint8_t> bytes);

/// Reads the plane mapped to `marker` out of the container, byte-for-byte.
ChannelImage extract_channel(const ContainerIndex& index,
                             std::span<const std::uint8_t> bytes,
                             const std::string& marker, const MarkerMap& mapping);

/// Emits the smallest legal container holding the given planes, one channel
/// per plane in order. Deterministic; intended for tests and synthetic data.
std::vector<std::uint8_t> write_fixture(std::span<const ChannelImage> planes);

}  // namespace organoquant::ingest
