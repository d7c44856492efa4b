#include <doctest.h>

#include <random>

#include "organoquant/image_ops.hpp"
#include "support/oracles.hpp"

using namespace organoquant;
using namespace organoquant::img;

namespace {

ChannelImage gray16(int w, int h, std::vector<std::uint16_t> px) {
    return ChannelImage(w, h, 16, std::move(px));
}

ChannelImage gray8(int w, int h, std::vector<std::uint16_t> px) {
    return ChannelImage(w, h, 8, std::move(px));
}

BinaryMask random_mask(std::mt19937& rng, int w, int h, double p_fg) {
    BinaryMask mask(w, h);
    std::bernoulli_distribution coin(p_fg);
    for (auto& b : mask.bits) b = coin(rng) ? 1 : 0;
    return mask;
}

}  // namespace

TEST_CASE("to_8bit full-scale endpoints and midpoint") {
    ChannelImage img = gray16(2, 2, {0, 65535, 32768, 32767});
    ChannelImage out = to_8bit(img, To8BitMode::FullScale);
    CHECK(out.pixels() == std::vector<std::uint16_t>{0, 255, 128, 127});
    CHECK(out.bit_depth() == 8);
}

TEST_CASE("to_8bit min-max stretch and constant rule") {
    ChannelImage img = gray16(3, 1, {100, 150, 200});
    ChannelImage out = to_8bit(img, To8BitMode::MinMax);
    CHECK(out.pixels() == std::vector<std::uint16_t>{0, 128, 255});

    ChannelImage flat = gray16(2, 2, {777, 777, 777, 777});
    CHECK(to_8bit(flat, To8BitMode::MinMax).pixels() ==
          std::vector<std::uint16_t>{0, 0, 0, 0});
}

TEST_CASE("to_8bit preserves marker and rejects 8-bit input") {
    ChannelImage img(1, 1, 16, {5}, "N-cad");
    CHECK(to_8bit(img, To8BitMode::FullScale).marker() == "N-cad");
    CHECK_THROWS_AS(to_8bit(gray8(1, 1, {5}), To8BitMode::FullScale), WrongBitDepth);
}

TEST_CASE("to_8bit is monotone in both modes") {
    std::mt19937 rng(101);
    std::vector<std::uint16_t> px(256);
    for (auto& v : px) v = static_cast<std::uint16_t>(rng() % 65536);
    ChannelImage img = gray16(16, 16, px);
    for (auto mode : {To8BitMode::FullScale, To8BitMode::MinMax}) {
        ChannelImage out = to_8bit(img, mode);
        for (std::size_t i = 0; i < px.size(); ++i)
            for (std::size_t j = 0; j < px.size(); ++j)
                if (px[i] <= px[j]) CHECK(out.pixels()[i] <= out.pixels()[j]);
    }
}

TEST_CASE("binarize with fixed thresholds") {
    ChannelImage zeros = gray8(2, 2, {0, 0, 0, 0});
    CHECK(binarize(zeros, Threshold::fixed(10)).count() == 0);

    ChannelImage two_tone = gray8(2, 2, {0, 255, 255, 0});
    BinaryMask mask = binarize(two_tone, Threshold::fixed(128));
    CHECK(mask.bits == std::vector<std::uint8_t>{0, 1, 1, 0});

    // boundary: strictly greater than the threshold
    ChannelImage at_level = gray8(1, 2, {128, 129});
    CHECK(binarize(at_level, Threshold::fixed(128)).bits ==
          std::vector<std::uint8_t>{0, 1});
}

TEST_CASE("Otsu splits a bimodal image and matches the exhaustive scan") {
    std::vector<std::uint16_t> px(64, 20);
    for (int i = 32; i < 64; ++i) px[static_cast<std::size_t>(i)] = 220;
    ChannelImage img = gray8(8, 8, px);

    int t = otsu_threshold(img);
    CHECK(t >= 20);
    CHECK(t <= 219);
    CHECK(t == oracles::otsu_oracle(img));

    BinaryMask mask = binarize(img, Threshold::otsu());
    CHECK(mask.count() == 32);
    for (int i = 0; i < 64; ++i)
        CHECK(static_cast<bool>(mask.bits[static_cast<std::size_t>(i)]) == (i >= 32));
}

TEST_CASE("Otsu matches the exhaustive scan on random images") {
    std::mt19937 rng(555);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<std::uint16_t> px(100);
        for (auto& v : px) v = static_cast<std::uint16_t>(rng() % 256);
        ChannelImage img = gray8(10, 10, px);
        CHECK(otsu_threshold(img) == oracles::otsu_oracle(img));
    }
}

TEST_CASE("Otsu refuses constant images") {
    CHECK_THROWS_AS(otsu_threshold(gray8(2, 2, {7, 7, 7, 7})), DegenerateHistogram);
}

TEST_CASE("Otsu picks the lowest threshold on ties") {
    // {0, 255} only: every t in 0..254 yields the same split
    ChannelImage img = gray8(2, 2, {0, 0, 255, 255});
    CHECK(otsu_threshold(img) == 0);
}

TEST_CASE("opening with an element larger than the image empties it") {
    BinaryMask mask(3, 3);
    std::fill(mask.bits.begin(), mask.bits.end(), 1);
    CHECK(morph_open(mask, 2).count() == 0);
    CHECK(morph_open(mask, 2) == oracles::open_oracle(mask, 2));
}

TEST_CASE("binarize of a mask rendering is the mask") {
    std::mt19937 rng(9);
    BinaryMask mask = random_mask(rng, 12, 9, 0.4);
    std::vector<std::uint16_t> px(mask.bits.size());
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = mask.bits[i] ? 255 : 0;
    CHECK(binarize(gray8(12, 9, px), Threshold::fixed(128)) == mask);
}

TEST_CASE("morph_open pointwise examples") {
    BinaryMask lone(7, 7);
    lone.set(3, 3, true);
    CHECK(morph_open(lone, 1).count() == 0);

    BinaryMask square(9, 9);
    for (int y = 2; y <= 6; ++y)
        for (int x = 2; x <= 6; ++x) square.set(x, y, true);
    CHECK(morph_open(square, 1) == square);
    CHECK(morph_open(square, 1) == oracles::open_oracle(square, 1));

    BinaryMask full(6, 5);
    std::fill(full.bits.begin(), full.bits.end(), 1);
    CHECK(morph_open(full, 1) == full);
    CHECK(morph_open(full, 1) == oracles::open_oracle(full, 1));
}

TEST_CASE("morph_open equals the window-scan oracle, is anti-extensive and idempotent") {
    std::mt19937 rng(31337);
    for (int trial = 0; trial < 30; ++trial) {
        int w = 4 + static_cast<int>(rng() % 20);
        int h = 4 + static_cast<int>(rng() % 20);
        int r = 1 + static_cast<int>(rng() % 2);
        BinaryMask mask = random_mask(rng, w, h, 0.55);
        BinaryMask opened = morph_open(mask, r);
        CHECK(opened == oracles::open_oracle(mask, r));
        for (std::size_t i = 0; i < mask.bits.size(); ++i)
            CHECK(opened.bits[i] <= mask.bits[i]);
        CHECK(morph_open(opened, r) == opened);
    }
}

TEST_CASE("label_components basics") {
    BinaryMask empty(5, 5);
    CHECK(label_components(empty, 0).component_count == 0);

    BinaryMask diag(4, 4);
    diag.set(1, 1, true);
    diag.set(2, 2, true);
    LabelMap map = label_components(diag, 0);
    CHECK(map.component_count == 1);
    CHECK(map.at(1, 1) == map.at(2, 2));
}

TEST_CASE("labels are dense and ordered by first raster pixel") {
    BinaryMask mask(8, 3);
    mask.set(6, 0, true);  // first in raster order
    mask.set(1, 1, true);
    mask.set(2, 2, true);  // joins via diagonal with (1,1)
    mask.set(4, 2, true);
    LabelMap map = label_components(mask, 0);
    CHECK(map.component_count == 3);
    CHECK(map.at(6, 0) == 1);
    CHECK(map.at(1, 1) == 2);
    CHECK(map.at(2, 2) == 2);
    CHECK(map.at(4, 2) == 3);
}

TEST_CASE("min_area drops small components and re-densifies") {
    BinaryMask mask(10, 4);
    mask.set(0, 0, true);  // area 1, dropped
    for (int x = 3; x <= 6; ++x) mask.set(x, 1, true);  // area 4, kept
    mask.set(9, 3, true);  // area 1, dropped
    LabelMap map = label_components(mask, 2);
    CHECK(map.component_count == 1);
    CHECK(map.at(0, 0) == 0);
    CHECK(map.at(3, 1) == 1);
    CHECK(map.at(9, 3) == 0);
}

TEST_CASE("label_components agrees with the flood-fill oracle") {
    std::mt19937 rng(123456);
    for (int trial = 0; trial < 100; ++trial) {
        BinaryMask mask = random_mask(rng, 64, 64, 0.35);
        int min_area = static_cast<int>(rng() % 4);
        LabelMap map = label_components(mask, min_area);
        auto oracle = oracles::flood_fill_components(mask, min_area);
        REQUIRE(map.component_count == oracle.count);

        // memberships: pixels of library label l must equal one oracle set
        std::vector<std::vector<int>> mine(static_cast<std::size_t>(map.component_count));
        for (int i = 0; i < 64 * 64; ++i)
            if (map.labels[static_cast<std::size_t>(i)] > 0)
                mine[static_cast<std::size_t>(map.labels[static_cast<std::size_t>(i)]) - 1]
                    .push_back(i);
        CHECK(mine == oracle.components);
    }
}
