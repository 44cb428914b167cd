#include "tefs/network/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tefs/error.hpp"

namespace tefs::network {

namespace {

constexpr char kMagic[4] = {'T', 'F', 'S', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        const std::uint64_t lo = u32();
        return lo | (static_cast<std::uint64_t>(u32()) << 32);
    }

    std::string str(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw FormatError("checkpoint is truncated");
    }
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t arch_code(Arch a) {
    switch (a) {
        case Arch::A1: return 0;
        case Arch::A2: return 1;
        case Arch::TEFS: return 2;
    }
    return 0;
}

}  // namespace

std::string encode_checkpoint(Network<float>& net) {
    std::string out(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, arch_code(net.arch()));
    put_u32(out, static_cast<std::uint32_t>(net.seed() & 0xFFFFFFFFULL));
    put_u32(out, static_cast<std::uint32_t>(net.seed() >> 32));
    put_u32(out, static_cast<std::uint32_t>(net.bands()));
    put_u32(out, static_cast<std::uint32_t>(net.frames()));
    const auto params = net.parameters();
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        put_u32(out, static_cast<std::uint32_t>(p.name.size()));
        out += p.name;
        put_u32(out, static_cast<std::uint32_t>(p.shape.size()));
        for (int d : p.shape) put_u32(out, static_cast<std::uint32_t>(d));
        for (float v : p.value) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

Network<float> decode_checkpoint(const std::string& bytes) {
    Reader r(bytes);
    if (r.str(4) != std::string(kMagic, 4)) throw FormatError("not a model checkpoint");
    const std::uint32_t version = r.u32();
    if (version != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t code = r.u32();
    if (code > 2) throw FormatError("invalid architecture code " + std::to_string(code));
    const Arch arch = code == 0 ? Arch::A1 : code == 1 ? Arch::A2 : Arch::TEFS;
    const std::uint64_t seed = r.u64();
    const int bands = static_cast<int>(r.u32());
    const int frames = static_cast<int>(r.u32());
    Network<float> net(arch, bands, frames, seed);
    auto params = net.parameters();
    const std::uint32_t count = r.u32();
    if (count != params.size()) throw FormatError("checkpoint array count does not match the architecture");
    for (auto& p : params) {
        const std::string name = r.str(r.u32());
        if (name != p.name) throw FormatError("checkpoint array '" + name + "' where '" + p.name + "' was expected");
        const std::uint32_t rank = r.u32();
        std::vector<int> shape(rank);
        for (auto& d : shape) d = static_cast<int>(r.u32());
        if (shape != p.shape) throw FormatError("checkpoint array '" + name + "' has the wrong shape");
        for (float& v : p.value) v = std::bit_cast<float>(r.u32());
    }
    if (!r.done()) throw FormatError("trailing bytes after checkpoint payload");
    return net;
}

void save_checkpoint(const std::filesystem::path& path, Network<float>& net) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::string bytes = encode_checkpoint(net);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Network<float> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFileError("cannot open " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace tefs::network
