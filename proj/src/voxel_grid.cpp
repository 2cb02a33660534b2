#include "octarl/voxel_grid.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

namespace octarl {

VoxelGrid::VoxelGrid(int dx, int dy, int dz, double cell_size)
    : dx_(dx), dy_(dy), dz_(dz), cell_size_(cell_size) {
    for (int d : {dx, dy, dz}) {
        require(d >= 4 && d % 4 == 0,
                "grid dims must each be >= 4 and divisible by 4, got " + std::to_string(d));
    }
    require(cell_size > 0.0, "cell_size must be positive");
    words_.assign(static_cast<size_t>((total_cells() + 63) / 64), 0);
}

int64_t VoxelGrid::occupied_count() const {
    int64_t n = 0;
    for (uint64_t w : words_) n += std::popcount(w);
    return n;
}

double iou(const VoxelGrid& a, const VoxelGrid& b) {
    require(a.dx() == b.dx() && a.dy() == b.dy() && a.dz() == b.dz(),
            "iou: dimension mismatch");
    int64_t inter = 0, uni = 0;
    const auto& wa = a.words();
    const auto& wb = b.words();
    for (size_t i = 0; i < wa.size(); ++i) {
        inter += std::popcount(wa[i] & wb[i]);
        uni += std::popcount(wa[i] | wb[i]);
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

constexpr char kGridMagic[4] = {'C', 'R', 'V', 'X'};
constexpr uint32_t kGridVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) fail(std::string("truncated-payload: reading ") + what);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void save_grid(const std::string& path, const VoxelGrid& grid) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open for writing: " + path);
    out.write(kGridMagic, 4);
    write_u32(out, kGridVersion);
    write_u32(out, static_cast<uint32_t>(grid.dx()));
    write_u32(out, static_cast<uint32_t>(grid.dy()));
    write_u32(out, static_cast<uint32_t>(grid.dz()));
    const int64_t nbytes = (grid.total_cells() + 7) / 8;
    // Packed words little-endian match the bit-0-first payload layout exactly.
    std::vector<unsigned char> payload(static_cast<size_t>(nbytes));
    for (int64_t i = 0; i < nbytes; ++i) {
        const uint64_t w = grid.words()[static_cast<size_t>(i >> 3)];
        payload[static_cast<size_t>(i)] = static_cast<unsigned char>(w >> ((i & 7) * 8));
    }
    out.write(reinterpret_cast<const char*>(payload.data()), nbytes);
    require(out.good(), "write failed: " + path);
}

VoxelGrid load_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kGridMagic, 4) != 0) fail("bad-magic: not a CRVX file: " + path);
    const uint32_t version = read_u32(in, "version");
    require(version == kGridVersion, "unsupported CRVX version " + std::to_string(version));
    const uint32_t dx = read_u32(in, "dx");
    const uint32_t dy = read_u32(in, "dy");
    const uint32_t dz = read_u32(in, "dz");
    constexpr uint32_t kMaxDim = 4096;
    for (uint32_t d : {dx, dy, dz}) {
        if (d == 0 || d > kMaxDim) fail("dims-overflow: dimension " + std::to_string(d));
    }
    VoxelGrid grid(static_cast<int>(dx), static_cast<int>(dy), static_cast<int>(dz));
    const int64_t nbytes = (grid.total_cells() + 7) / 8;
    std::vector<unsigned char> payload(static_cast<size_t>(nbytes));
    in.read(reinterpret_cast<char*>(payload.data()), nbytes);
    if (!in) fail("truncated-payload: expected " + std::to_string(nbytes) + " payload bytes");
    for (int z = 0; z < grid.dz(); ++z)
        for (int y = 0; y < grid.dy(); ++y)
            for (int x = 0; x < grid.dx(); ++x) {
                const int64_t i =
                    x + static_cast<int64_t>(grid.dx()) * (y + static_cast<int64_t>(grid.dy()) * z);
                if ((payload[static_cast<size_t>(i >> 3)] >> (i & 7)) & 1)
                    grid.set(x, y, z, true);
            }
    return grid;
}

}  // namespace octarl
