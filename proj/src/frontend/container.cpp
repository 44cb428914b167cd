#include "tefs/frontend/container.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tefs/error.hpp"

namespace tefs::frontend {

namespace {

constexpr char kMagic[4] = {'T', 'F', 'S', 'R'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 32;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return v;
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
    return static_cast<std::uint64_t>(get_u32(in, pos)) | (static_cast<std::uint64_t>(get_u32(in, pos + 4)) << 32);
}

}  // namespace

std::string encode_representation(const Representation& rep) {
    if (rep.values.size() != static_cast<std::size_t>(rep.bands) * static_cast<std::size_t>(rep.frames))
        throw ShapeError("representation value count does not match its shape");
    std::string out;
    out.reserve(kHeaderSize + 4 * rep.values.size());
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(rep.kind));
    put_u32(out, static_cast<std::uint32_t>(rep.bands));
    put_u32(out, static_cast<std::uint32_t>(rep.frames));
    put_u64(out, std::bit_cast<std::uint64_t>(rep.frame_seconds));
    put_u32(out, static_cast<std::uint32_t>(rep.sample_rate));
    for (double v : rep.values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    return out;
}

Representation decode_representation(const std::string& bytes) {
    if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("not a representation container");
    if (get_u32(bytes, 4) != kVersion)
        throw FormatError("unsupported representation container version " + std::to_string(get_u32(bytes, 4)));
    Representation rep;
    const std::uint32_t kind = get_u32(bytes, 8);
    if (kind > 2) throw FormatError("invalid representation kind " + std::to_string(kind));
    rep.kind = static_cast<RepresentationKind>(kind);
    rep.bands = static_cast<int>(get_u32(bytes, 12));
    rep.frames = static_cast<int>(get_u32(bytes, 16));
    rep.frame_seconds = std::bit_cast<double>(get_u64(bytes, 20));
    rep.sample_rate = static_cast<int>(get_u32(bytes, 28));
    const std::size_t count = static_cast<std::size_t>(rep.bands) * static_cast<std::size_t>(rep.frames);
    if (bytes.size() != kHeaderSize + 4 * count) throw FormatError("representation container has wrong payload size");
    rep.values.resize(count);
    for (std::size_t i = 0; i < count; ++i)
        rep.values[i] = std::bit_cast<float>(get_u32(bytes, kHeaderSize + 4 * i));
    return rep;
}

void write_representation(const std::filesystem::path& path, const Representation& rep) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::string bytes = encode_representation(rep);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Representation read_representation(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFileError("cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_representation(bytes);
}

void write_representation_csv(const std::filesystem::path& path, const Representation& rep) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw Error("cannot write " + path.string());
    for (int k = 0; k < rep.bands; ++k) {
        for (int l = 0; l < rep.frames; ++l) std::fprintf(f, l ? ",%.9g" : "%.9g", rep.at(k, l));
        std::fputc('\n', f);
    }
    std::fclose(f);
}

}  // namespace tefs::frontend
