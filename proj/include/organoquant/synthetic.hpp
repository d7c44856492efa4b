#pragma once

#include <cstdint>
#include <string>

#include "organoquant/raster.hpp"

namespace organoquant::synthetic {

/// 16-bit plane with one continuous bright annulus on a dark background —
/// a wild-type-like boundary-marker channel (single connected contour).
ChannelImage ring_plane(int size, int inner_radius, int outer_radius,
                        std::uint16_t foreground, std::uint16_t background,
                        std::string marker = {});

/// 16-bit plane with one long bright arc plus (fragment_count - 1) small
/// disjoint blobs — a mutant-like boundary-marker channel with exactly
/// fragment_count components, one of them long.
ChannelImage fragments_plane(int size, int fragment_count, std::uint16_t foreground,
                             std::uint16_t background, std::string marker = {});

/// 16-bit plane with a grid x grid array of uniform bright disks on a dark
/// background — a nucleus-marker channel with grid*grid cells.
ChannelImage disk_grid_plane(int size, int grid, int disk_radius,
                             std::uint16_t foreground, std::uint16_t background,
                             std::string marker = {});

/// 16-bit constant plane.
ChannelImage flat_plane(int size, std::uint16_t value, std::string marker = {});

}  // namespace organoquant::synthetic
