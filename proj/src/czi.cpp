#include "organoquant/czi.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

#include "organoquant/binary.hpp"

namespace organoquant::ingest {
namespace {

constexpr char kFileTag[] = "ZISRAWFILE";
constexpr char kSubblockTag[] = "ZISRAWSUBBLOCK";
constexpr char kDirectoryTag[] = "ZISRAWDIRECTORY";
constexpr char kMetadataTag[] = "ZISRAWMETADATA";
constexpr char kAttachDirTag[] = "ZISRAWATTDIR";

constexpr std::size_t kSegmentHeaderSize = 32;
constexpr std::size_t kSubblockFixedPart = 16;   // metadata/attachment/data sizes
constexpr std::size_t kDirEntryFixedPart = 32;   // DV entry without dimension entries
constexpr std::size_t kDimensionEntrySize = 20;
constexpr std::size_t kMinSubblockDataOffset = 256;
constexpr int kMaxDimensionCount = 32;
constexpr std::int64_t kMaxPlaneSide = 1 << 20;
constexpr std::int64_t kMaxPlanePixels = std::int64_t{1} << 26;

std::string trim_tag(std::string_view raw) {
    auto end = raw.find_last_not_of('\0');
    if (end == std::string_view::npos) return {};
    return std::string(raw.substr(0, end + 1));
}

struct FileHeaderFields {
    std::int32_t major = 0;
    std::int32_t minor = 0;
    std::int64_t directory_position = 0;
    std::int64_t metadata_position = 0;
    std::int64_t attachment_directory_position = 0;
};

FileHeaderFields parse_file_header(std::span<const std::uint8_t> payload) {
    bin::Reader r(payload);
    FileHeaderFields f;
    f.major = r.i32le();
    f.minor = r.i32le();
    r.skip(8);   // reserved
    r.skip(32);  // primary file guid + file guid
    r.i32le();   // file part
    f.directory_position = r.i64le();
    f.metadata_position = r.i64le();
    r.i32le();   // update pending
    f.attachment_directory_position = r.i64le();
    return f;
}

// Parses a DirectoryEntryDV starting at the reader position. The same record
// appears inside subblock segments and in the subblock directory.
SubblockEntry parse_directory_entry(bin::Reader& r) {
    SubblockEntry entry;
    if (r.ascii(2) != "DV")
        throw MalformedHeader("subblock directory entry schema is not DV");
    std::int32_t pixel_type = r.i32le();
    switch (pixel_type) {
        case 0: entry.pixel_type = PixelType::Gray8; break;
        case 1: entry.pixel_type = PixelType::Gray16; break;
        default:
            throw UnsupportedPixelType("pixel type " + std::to_string(pixel_type) +
                                       " (only Gray8 and Gray16 are supported)");
    }
    r.i64le();  // file position (redundant with the segment walk)
    r.i32le();  // file part
    std::int32_t compression = r.i32le();
    if (compression != 0)
        throw UnsupportedCompression("compression flag " + std::to_string(compression));
    r.u8();     // pyramid type
    r.skip(5);  // reserved
    std::int32_t dim_count = r.i32le();
    if (dim_count < 1 || dim_count > kMaxDimensionCount)
        throw MalformedHeader("implausible dimension count " + std::to_string(dim_count));

    int x_count = 0;
    int y_count = 0;
    int c_count = 0;
    for (std::int32_t i = 0; i < dim_count; ++i) {
        DimensionEntry d;
        d.tag = trim_tag(r.ascii(4));
        d.start = r.i32le();
        d.size = r.i32le();
        r.f32le();  // start coordinate
        r.i32le();  // stored size
        if (d.size < 1) throw MalformedHeader("dimension '" + d.tag + "' has size < 1");
        if (d.tag == "X") ++x_count;
        else if (d.tag == "Y") ++y_count;
        else if (d.tag == "C") ++c_count;
        else if (d.size > 1)
            throw UnsupportedDimension("multi-value dimension '" + d.tag +
                                       "' (only single 2-D planes are supported)");
        entry.dims.push_back(std::move(d));
    }
    if (x_count != 1 || y_count != 1)
        throw MalformedHeader("subblock must carry exactly one X and one Y dimension");
    if (c_count > 1)
        throw MalformedHeader("subblock carries more than one C dimension");

    for (const auto& d : entry.dims) {
        if (d.tag == "C") {
            if (d.start < 0) throw MalformedHeader("negative channel index");
            entry.channel_index = d.start;
        }
        if ((d.tag == "X" || d.tag == "Y") && d.size > kMaxPlaneSide)
            throw MalformedHeader("plane dimension exceeds supported size");
    }
    std::int64_t pixel_count =
        static_cast<std::int64_t>(entry.width()) * static_cast<std::int64_t>(entry.height());
    if (pixel_count > kMaxPlanePixels)
        throw MalformedHeader("plane pixel count exceeds supported size");
    return entry;
}

std::size_t directory_entry_size(const SubblockEntry& e) {
    return kDirEntryFixedPart + kDimensionEntrySize * e.dims.size();
}

void write_directory_entry(bin::Writer& w, const ChannelImage& plane, int channel,
                           std::uint64_t segment_offset) {
    w.ascii("DV");
    w.i32le(plane.bit_depth() == 8 ? 0 : 1);                 // pixel type
    w.i64le(static_cast<std::int64_t>(segment_offset));      // file position
    w.i32le(0);                                              // file part
    w.i32le(0);                                              // compression: none
    w.u8(0);                                                 // pyramid type
    w.zeros(5);
    w.i32le(3);                                              // X, Y, C
    auto dim = [&w](const char* tag, std::int32_t start, std::int32_t size) {
        char buf[4] = {0, 0, 0, 0};
        buf[0] = tag[0];
        w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(buf), 4));
        w.i32le(start);
        w.i32le(size);
        w.f32le(0.0f);
        w.i32le(size);  // stored size
    };
    dim("X", 0, plane.width());
    dim("Y", 0, plane.height());
    dim("C", channel, 1);
}

}  // namespace

int SubblockEntry::width() const {
    for (const auto& d : dims)
        if (d.tag == "X") return d.size;
    return 0;
}

int SubblockEntry::height() const {
    for (const auto& d : dims)
        if (d.tag == "Y") return d.size;
    return 0;
}

ContainerIndex parse_container(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kSegmentHeaderSize)
        throw TruncatedFile("input shorter than one segment header");
    {
        bin::Reader head(bytes);
        if (trim_tag(head.ascii(16)) != kFileTag)
            throw MalformedHeader("first segment tag is not " + std::string(kFileTag));
    }

    ContainerIndex index;
    FileHeaderFields header{};
    bool saw_file_header = false;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < kSegmentHeaderSize)
            throw TruncatedFile("trailing bytes shorter than a segment header");
        bin::Reader r(bytes, pos);
        std::string tag = trim_tag(r.ascii(16));
        std::uint64_t allocated = r.u64le();
        std::uint64_t used = r.u64le();
        if (used == 0) used = allocated;  // zero used size means fully used
        if (used > allocated)
            throw MalformedHeader("segment '" + tag + "' used size exceeds allocated size");
        std::size_t payload = pos + kSegmentHeaderSize;
        if (allocated > bytes.size() - payload)
            throw TruncatedFile("segment '" + tag + "' extends past end of input");
        index.segments.push_back({tag, payload, used});
        auto payload_span = bytes.subspan(payload, static_cast<std::size_t>(used));

        try {
            if (tag == kFileTag) {
                if (saw_file_header)
                    throw MalformedHeader("duplicate file header segment");
                saw_file_header = true;
                header = parse_file_header(payload_span);
                index.file_version = {header.major, header.minor};
            } else if (tag == kSubblockTag) {
                bin::Reader sb(payload_span);
                std::int32_t metadata_size = sb.i32le();
                sb.i32le();  // attachment size
                std::int64_t data_size = sb.i64le();
                if (metadata_size < 0 || data_size < 0)
                    throw MalformedHeader("negative subblock payload size");
                SubblockEntry entry = parse_directory_entry(sb);
                std::size_t entry_size = directory_entry_size(entry);
                std::size_t data_start =
                    std::max(kMinSubblockDataOffset, kSubblockFixedPart + entry_size);
                std::uint64_t expected =
                    static_cast<std::uint64_t>(entry.width()) * entry.height() *
                    static_cast<std::uint64_t>(entry.bytes_per_pixel());
                if (static_cast<std::uint64_t>(data_size) != expected)
                    throw MalformedHeader("subblock data size does not match X*Y*bytes_per_pixel");
                std::uint64_t end = static_cast<std::uint64_t>(data_start) +
                                    static_cast<std::uint64_t>(metadata_size) +
                                    static_cast<std::uint64_t>(data_size);
                if (end > used)
                    throw TruncatedFile("subblock pixel data extends past segment payload");
                entry.data_offset = payload + data_start + static_cast<std::uint64_t>(metadata_size);
                entry.data_size = static_cast<std::uint64_t>(data_size);
                index.subblocks.push_back(std::move(entry));
            }
            // Directory, metadata and attachment segments are indexed but their
            // payloads are not interpreted.
        } catch (const std::out_of_range&) {
            throw TruncatedFile("segment '" + tag + "' payload ends inside a structure");
        }
        pos = payload + static_cast<std::size_t>(allocated);
    }

    // Positions declared by the file header must resolve to segments of the
    // expected kind; a dangling pointer means the file was cut short.
    auto check_position = [&](std::int64_t at, const char* expected_tag) {
        if (at == 0) return;
        if (at < 0 || static_cast<std::uint64_t>(at) + kSegmentHeaderSize > bytes.size())
            throw TruncatedFile(std::string("file header points past end of input for ") +
                                expected_tag);
        bin::Reader r(bytes, static_cast<std::size_t>(at));
        if (trim_tag(r.ascii(16)) != expected_tag)
            throw MalformedHeader(std::string("file header position does not point at ") +
                                  expected_tag);
    };
    check_position(header.directory_position, kDirectoryTag);
    check_position(header.metadata_position, kMetadataTag);
    check_position(header.attachment_directory_position, kAttachDirTag);

    return index;
}

ChannelImage extract_channel(const ContainerIndex& index,
                             std::span<const std::uint8_t> bytes,
                             const std::string& marker, const MarkerMap& mapping) {
    auto it = mapping.find(marker);
    if (it == mapping.end())
        throw UnknownMarker("marker '" + marker + "' is not in the channel mapping");
    int channel = it->second;

    const SubblockEntry* found = nullptr;
    for (const auto& sb : index.subblocks) {
        if (sb.channel_index == channel) {
            found = &sb;
            break;
        }
    }
    if (!found)
        throw MissingChannel("no subblock for channel " + std::to_string(channel) +
                             " (marker '" + marker + "')");
    if (found->data_offset + found->data_size > bytes.size())
        throw TruncatedFile("subblock data lies past end of input");

    int w = found->width();
    int h = found->height();
    std::vector<std::uint16_t> pixels(static_cast<std::size_t>(w) * h);
    bin::Reader r(bytes, found->data_offset);
    if (found->pixel_type == PixelType::Gray8) {
        auto raw = r.bytes(pixels.size());
        std::copy(raw.begin(), raw.end(), pixels.begin());
        return ChannelImage(w, h, 8, std::move(pixels), marker);
    }
    for (auto& p : pixels) p = r.u16le();
    return ChannelImage(w, h, 16, std::move(pixels), marker);
}

std::vector<std::uint8_t> write_fixture(std::span<const ChannelImage> planes) {
    if (planes.empty()) throw EmptyInput("fixture requires at least one plane");
    if (planes.size() > 8)
        throw Error("fixture supports at most 8 planes, got " + std::to_string(planes.size()));
    for (const auto& p : planes) {
        if (p.width() == 0 || p.height() == 0)
            throw ZeroDimension("fixture plane has zero width or height");
        if (p.width() != planes[0].width() || p.height() != planes[0].height())
            throw DimensionMismatch("fixture planes must share width and height");
    }

    bin::Writer w;
    auto begin_segment = [&w](const char* tag) {
        std::size_t header_at = w.size();
        std::string padded(tag);
        padded.resize(16, '\0');
        w.ascii(padded);
        w.u64le(0);  // allocated, patched on end
        w.u64le(0);  // used, patched on end
        return header_at;
    };
    auto end_segment = [&w](std::size_t header_at) {
        std::size_t used = w.size() - header_at - kSegmentHeaderSize;
        std::size_t allocated = (used + 31) / 32 * 32;
        w.zeros(allocated - used);
        w.patch_u64le(header_at + 16, allocated);
        w.patch_u64le(header_at + 24, used);
    };

    // File header; the directory position is patched once it is known.
    std::size_t file_header_at = begin_segment(kFileTag);
    std::size_t payload_at = w.size();
    w.i32le(1);  // major
    w.i32le(0);  // minor
    w.zeros(8);
    w.ascii("organoquant-fixt");  // primary file guid (fixed for determinism)
    w.ascii("organoquant-fixt");  // file guid
    w.i32le(0);                   // file part
    std::size_t directory_pos_at = w.size();
    w.i64le(0);                   // subblock directory position, patched below
    w.i64le(0);                   // metadata position: none
    w.i32le(0);                   // update pending
    w.i64le(0);                   // attachment directory position: none
    w.zeros(512 - (w.size() - payload_at));
    end_segment(file_header_at);

    std::vector<std::uint64_t> segment_offsets;
    for (std::size_t c = 0; c < planes.size(); ++c) {
        const ChannelImage& plane = planes[c];
        std::size_t header_at = begin_segment(kSubblockTag);
        segment_offsets.push_back(header_at);
        std::size_t sb_payload_at = w.size();
        std::uint64_t data_size = static_cast<std::uint64_t>(plane.size()) *
                                  (plane.bit_depth() == 8 ? 1 : 2);
        w.i32le(0);  // metadata size
        w.i32le(0);  // attachment size
        w.i64le(static_cast<std::int64_t>(data_size));
        write_directory_entry(w, plane, static_cast<int>(c), header_at);
        std::size_t entry_size = w.size() - sb_payload_at - kSubblockFixedPart;
        std::size_t data_start =
            std::max(kMinSubblockDataOffset, kSubblockFixedPart + entry_size);
        w.zeros(data_start - (kSubblockFixedPart + entry_size));
        if (plane.bit_depth() == 8) {
            for (std::uint16_t v : plane.pixels()) w.u8(static_cast<std::uint8_t>(v));
        } else {
            for (std::uint16_t v : plane.pixels()) w.u16le(v);
        }
        end_segment(header_at);
    }

    std::size_t directory_at = begin_segment(kDirectoryTag);
    w.i32le(static_cast<std::int32_t>(planes.size()));
    w.zeros(124);
    for (std::size_t c = 0; c < planes.size(); ++c)
        write_directory_entry(w, planes[c], static_cast<int>(c), segment_offsets[c]);
    end_segment(directory_at);

    w.patch_u64le(directory_pos_at, directory_at);
    return std::move(w.buffer());
}

}  // namespace organoquant::ingest
