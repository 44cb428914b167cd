#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tefs/frontend/representation.hpp"

namespace tefs::cli {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
};

// Fixed perceptual colormap (viridis anchors, linear in between); t in [0, 1].
Rgb colormap(double t);

struct Image {
    int width = 0;
    int height = 0;
    std::vector<Rgb> pixels;  // row-major, top row first

    Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// Lowest band at the bottom, one pixel column per frame, `band_height`
// pixel rows per band. Values are min/max scaled per representation; the
// bottom margin prints the range.
Image render_representation(const frontend::Representation& rep, int band_height = 6);

// 8-bit RGB PNG with tEXt chunks (key, value) appended.
void write_png(const std::filesystem::path& path, const Image& image,
               const std::vector<std::pair<std::string, std::string>>& text = {});

void render_representation_png(const std::filesystem::path& path, const frontend::Representation& rep);

}  // namespace tefs::cli
