#include "organoquant/pgm.hpp"

#include <cctype>
#include <string>

namespace organoquant::ingest {
namespace {

// Scanner over the PGM header: whitespace separates tokens, '#' starts a
// comment running to end of line.
class HeaderScanner {
public:
    explicit HeaderScanner(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    long next_number() {
        skip_separators();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
            throw BadMagic("expected a decimal number in graymap header");
        long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 1 << 26) throw BadMagic("graymap header number out of range");
            ++pos_;
        }
        return v;
    }

    // Position of the first raster byte: exactly one whitespace byte after
    // the maxval token.
    std::size_t raster_start() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw TruncatedPixels("missing whitespace before raster data");
        return pos_ + 1;
    }

    std::size_t pos() const { return pos_; }

private:
    void skip_separators() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

ChannelImage read_pgm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw BadMagic("not a binary portable graymap (magic is not P5)");

    HeaderScanner scan(bytes.subspan(2));
    long width = scan.next_number();
    long height = scan.next_number();
    long maxval = scan.next_number();
    if (maxval != 255 && maxval != 65535)
        throw BadMaxval("maxval " + std::to_string(maxval) + " (must be 255 or 65535)");

    std::size_t raster = 2 + scan.raster_start();
    std::size_t pixel_count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    int bit_depth = maxval == 255 ? 8 : 16;
    std::size_t needed = pixel_count * (bit_depth == 8 ? 1 : 2);
    if (bytes.size() - raster < needed)
        throw TruncatedPixels("raster holds fewer bytes than width * height requires");

    std::vector<std::uint16_t> pixels(pixel_count);
    if (bit_depth == 8) {
        for (std::size_t i = 0; i < pixel_count; ++i) pixels[i] = bytes[raster + i];
    } else {
        for (std::size_t i = 0; i < pixel_count; ++i) {
            pixels[i] = static_cast<std::uint16_t>(bytes[raster + 2 * i] << 8 |
                                                   bytes[raster + 2 * i + 1]);
        }
    }
    return ChannelImage(static_cast<int>(width), static_cast<int>(height), bit_depth,
                        std::move(pixels));
}

std::vector<std::uint8_t> write_pgm(const ChannelImage& image) {
    std::string header = "P5\n" + std::to_string(image.width()) + " " +
                         std::to_string(image.height()) + "\n" +
                         std::to_string(image.max_value()) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + image.size() * (image.bit_depth() == 8 ? 1 : 2));
    for (std::uint16_t v : image.pixels()) {
        if (image.bit_depth() == 16) out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v & 0xff));
    }
    return out;
}

}  // namespace organoquant::ingest
