#include "organoquant/dataset.hpp"

#include <fstream>
#include <string>
#include <vector>

#include "organoquant/czi.hpp"
#include "organoquant/synthetic.hpp"

namespace organoquant::synthetic {
namespace {

constexpr int kSize = 256;

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void write_image(const std::filesystem::path& path, const ChannelImage& pax6,
                 const ChannelImage& ncad) {
    std::vector<ChannelImage> planes{pax6, ncad, flat_plane(kSize, 600, "E-cad"),
                                     flat_plane(kSize, 900, "DAPI")};
    write_bytes(path, ingest::write_fixture(planes));
}

}  // namespace

std::filesystem::path write_sample_dataset(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "WT");
    fs::create_directories(dir / "FKO");

    const std::uint16_t bright[3] = {58000, 54000, 50000};
    const std::uint16_t dim[3] = {9000, 11000, 13000};
    const int ring_inner[3] = {78, 80, 82};
    const int fragment_count[3] = {46, 48, 50};

    for (int i = 0; i < 3; ++i) {
        write_image(dir / "WT" / ("wt" + std::to_string(i + 1) + ".czi"),
                    disk_grid_plane(kSize, 5, 7, bright[i], 900, "PAX6"),
                    ring_plane(kSize, ring_inner[i], ring_inner[i] + 6, 58000, 1200, "N-cad"));
        write_image(dir / "FKO" / ("fko" + std::to_string(i + 1) + ".czi"),
                    disk_grid_plane(kSize, 5, 7, dim[i], 900, "PAX6"),
                    fragments_plane(kSize, fragment_count[i], 58000, 1200, "N-cad"));
    }

    auto input = [&dir](const char* group, const char* stem, int i) {
        return (dir / group / (std::string(stem) + std::to_string(i + 1) + ".czi"))
            .generic_string();
    };
    std::string config = "{\n  \"groups\": [\n";
    config += "    {\"name\": \"WT\", \"inputs\": [";
    for (int i = 0; i < 3; ++i)
        config += (i ? ", \"" : "\"") + input("WT", "wt", i) + "\"";
    config += "]},\n    {\"name\": \"FKO\", \"inputs\": [";
    for (int i = 0; i < 3; ++i)
        config += (i ? ", \"" : "\"") + input("FKO", "fko", i) + "\"";
    config += "]}\n  ],\n";
    config += "  \"marker_mapping\": {\"PAX6\": 0, \"N-cad\": 1, \"E-cad\": 2, \"DAPI\": 3},\n";
    config += "  \"output_dir\": \"" + (dir / "out").generic_string() + "\"\n}\n";

    fs::path config_path = dir / "config.json";
    std::ofstream out(config_path, std::ios::binary | std::ios::trunc);
    out << config;
    return config_path;
}

}  // namespace organoquant::synthetic
