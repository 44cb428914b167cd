#include "tefs/cli/render.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>

#include "tefs/error.hpp"

namespace tefs::cli {

Rgb colormap(double t) {
    static constexpr std::array<std::array<double, 3>, 5> stops = {{
        {68, 1, 84},
        {59, 82, 139},
        {33, 145, 140},
        {94, 201, 98},
        {253, 231, 37},
    }};
    if (!(t > 0.0)) t = 0.0;
    if (t > 1.0) t = 1.0;
    const double pos = t * (stops.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(pos), stops.size() - 2);
    const double f = pos - static_cast<double>(i);
    Rgb c;
    c.r = static_cast<std::uint8_t>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0])));
    c.g = static_cast<std::uint8_t>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1])));
    c.b = static_cast<std::uint8_t>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2])));
    return c;
}

namespace {

// 3x5 glyphs, one row per entry, bit 2 = left column.
const std::array<std::uint8_t, 5>* glyph(char ch) {
    static const std::array<std::uint8_t, 5> digits[10] = {
        {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
        {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7},
    };
    static const std::array<std::uint8_t, 5> minus{0, 0, 7, 0, 0}, dot{0, 0, 0, 0, 2}, plus{0, 2, 7, 2, 0},
        e{7, 4, 7, 4, 7}, m{5, 7, 7, 5, 5}, i{2, 0, 2, 2, 2}, n{0, 6, 5, 5, 5}, a{2, 5, 7, 5, 5},
        x{5, 5, 2, 5, 5}, colon{0, 2, 0, 2, 0};
    if (ch >= '0' && ch <= '9') return &digits[ch - '0'];
    switch (ch) {
        case '-': return &minus;
        case '.': return &dot;
        case '+': return &plus;
        case 'e': return &e;
        case 'm': return &m;
        case 'i': return &i;
        case 'n': return &n;
        case 'a': return &a;
        case 'x': return &x;
        case ':': return &colon;
        default: return nullptr;
    }
}

void draw_text(Image& img, int x0, int y0, const std::string& s, Rgb color) {
    int x = x0;
    for (char ch : s) {
        if (const auto* g = glyph(ch)) {
            for (int row = 0; row < 5; ++row)
                for (int col = 0; col < 3; ++col)
                    if (((*g)[static_cast<std::size_t>(row)] >> (2 - col)) & 1) {
                        const int px = x + col, py = y0 + row;
                        if (px >= 0 && px < img.width && py >= 0 && py < img.height) img.at(px, py) = color;
                    }
        }
        x += 4;
    }
}

}  // namespace

Image render_representation(const frontend::Representation& rep, int band_height) {
    if (rep.bands < 1 || rep.frames < 1) throw InvalidArgument("cannot render an empty representation");
    if (band_height < 1) throw InvalidArgument("band height must be positive");
    double lo = rep.values.front(), hi = rep.values.front();
    for (double v : rep.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    char label[96];
    std::snprintf(label, sizeof label, "min:%.3g max:%.3g", lo, hi);
    const std::string text = label;
    constexpr int margin = 9;
    Image img;
    img.width = std::max(rep.frames, static_cast<int>(text.size()) * 4 + 4);
    img.height = rep.bands * band_height + margin;
    img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, Rgb{255, 255, 255});
    const double span = hi > lo ? hi - lo : 1.0;
    for (int k = 0; k < rep.bands; ++k) {
        const int top = (rep.bands - 1 - k) * band_height;
        for (int l = 0; l < rep.frames; ++l) {
            const Rgb c = colormap((rep.at(k, l) - lo) / span);
            for (int dy = 0; dy < band_height; ++dy) img.at(l, top + dy) = c;
        }
    }
    draw_text(img, 2, rep.bands * band_height + 2, text, Rgb{0, 0, 0});
    return img;
}

namespace {

// Only plain C state crosses the setjmp boundary here.
bool write_png_rows(std::FILE* fp, int width, int height, png_bytepp rows, png_textp chunks, int n_chunks) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    if (n_chunks > 0) png_set_text(png, info, chunks, n_chunks);
    png_set_rows(png, info, rows);
    png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& image,
               const std::vector<std::pair<std::string, std::string>>& text) {
    if (image.width < 1 || image.height < 1) throw InvalidArgument("empty image");
    std::vector<png_byte> data(image.pixels.size() * 3);
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        data[3 * i] = image.pixels[i].r;
        data[3 * i + 1] = image.pixels[i].g;
        data[3 * i + 2] = image.pixels[i].b;
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
    for (int y = 0; y < image.height; ++y) rows[static_cast<std::size_t>(y)] = data.data() + static_cast<std::size_t>(y) * image.width * 3;
    std::vector<png_text> chunks(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
        chunks[i].key = const_cast<char*>(text[i].first.c_str());
        chunks[i].text = const_cast<char*>(text[i].second.c_str());
    }
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!fp) throw Error("cannot write " + path.string());
    if (!write_png_rows(fp.get(), image.width, image.height, rows.data(), chunks.data(), static_cast<int>(chunks.size())))
        throw Error("failed writing PNG " + path.string());
}

void render_representation_png(const std::filesystem::path& path, const frontend::Representation& rep) {
    double lo = rep.values.empty() ? 0.0 : rep.values.front(), hi = lo;
    for (double v : rep.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    char buf[64];
    std::vector<std::pair<std::string, std::string>> text;
    text.emplace_back("kind", std::string(frontend::kind_name(rep.kind)));
    std::snprintf(buf, sizeof buf, "%.9g", lo);
    text.emplace_back("min", buf);
    std::snprintf(buf, sizeof buf, "%.9g", hi);
    text.emplace_back("max", buf);
    write_png(path, render_representation(rep), text);
}

}  // namespace tefs::cli
