#include "organoquant/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace organoquant::synthetic {
namespace {

std::vector<std::uint16_t> filled(int size, std::uint16_t value) {
    return std::vector<std::uint16_t>(static_cast<std::size_t>(size) * size, value);
}

void paint_disk(std::vector<std::uint16_t>& px, int size, double cx, double cy,
                double radius, std::uint16_t value) {
    int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
    int x1 = std::min(size - 1, static_cast<int>(std::ceil(cx + radius)));
    int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
    int y1 = std::min(size - 1, static_cast<int>(std::ceil(cy + radius)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            double dx = x - cx;
            double dy = y - cy;
            if (dx * dx + dy * dy <= radius * radius)
                px[static_cast<std::size_t>(y) * size + x] = value;
        }
    }
}

// Paints the annular sector between the two radii covering angles
// [start_deg, end_deg] measured from +x (y down).
void paint_annulus(std::vector<std::uint16_t>& px, int size, double cx, double cy,
                   double r_in, double r_out, double start_deg, double end_deg,
                   std::uint16_t value) {
    double a0 = start_deg * std::numbers::pi / 180.0;
    double a1 = end_deg * std::numbers::pi / 180.0;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double dx = x - cx;
            double dy = y - cy;
            double r = std::hypot(dx, dy);
            if (r < r_in || r > r_out) continue;
            double angle = std::atan2(dy, dx);
            if (angle < 0) angle += 2.0 * std::numbers::pi;
            if (angle >= a0 && angle <= a1)
                px[static_cast<std::size_t>(y) * size + x] = value;
        }
    }
}

}  // namespace

ChannelImage ring_plane(int size, int inner_radius, int outer_radius,
                        std::uint16_t foreground, std::uint16_t background,
                        std::string marker) {
    if (size < 2 * outer_radius + 4)
        throw std::invalid_argument("ring_plane: ring does not fit the plane");
    auto px = filled(size, background);
    double c = (size - 1) / 2.0;
    paint_annulus(px, size, c, c, inner_radius, outer_radius, 0.0, 360.0, foreground);
    return ChannelImage(size, size, 16, std::move(px), std::move(marker));
}

ChannelImage fragments_plane(int size, int fragment_count, std::uint16_t foreground,
                             std::uint16_t background, std::string marker) {
    if (fragment_count < 1 || fragment_count > 50)
        throw std::invalid_argument("fragments_plane: fragment count must be in [1, 50]");
    if (size < 200)
        throw std::invalid_argument("fragments_plane: plane must be at least 200 px");

    auto px = filled(size, background);
    double c = (size - 1) / 2.0;
    double scale = size / 256.0;

    // One long broken arc, the remains of the ring.
    paint_annulus(px, size, c, c, 80.0 * scale, 86.0 * scale, 20.0, 290.0, foreground);

    // Small blobs scattered over the interior, clear of the arc and of each
    // other (grid spacing 16 against blob radius 3, at the reference scale).
    int blobs = fragment_count - 1;
    int painted = 0;
    for (int j = 0; j < 7 && painted < blobs; ++j) {
        for (int i = 0; i < 7 && painted < blobs; ++i) {
            double bx = c + (i - 3) * 16.0 * scale;
            double by = c + (j - 3) * 16.0 * scale;
            paint_disk(px, size, bx, by, 3.0 * scale, foreground);
            ++painted;
        }
    }
    if (painted < blobs)
        throw std::invalid_argument("fragments_plane: fragment count exceeds blob grid");
    return ChannelImage(size, size, 16, std::move(px), std::move(marker));
}

ChannelImage disk_grid_plane(int size, int grid, int disk_radius,
                             std::uint16_t foreground, std::uint16_t background,
                             std::string marker) {
    if (grid < 1) throw std::invalid_argument("disk_grid_plane: grid must be >= 1");
    double spacing = static_cast<double>(size) / (grid + 1);
    if (spacing < 2 * disk_radius + 4)
        throw std::invalid_argument("disk_grid_plane: disks would touch");
    auto px = filled(size, background);
    for (int j = 1; j <= grid; ++j)
        for (int i = 1; i <= grid; ++i)
            paint_disk(px, size, i * spacing, j * spacing, disk_radius, foreground);
    return ChannelImage(size, size, 16, std::move(px), std::move(marker));
}

ChannelImage flat_plane(int size, std::uint16_t value, std::string marker) {
    return ChannelImage(size, size, 16, filled(size, value), std::move(marker));
}

}  // namespace organoquant::synthetic
