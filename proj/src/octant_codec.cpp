#include "octarl/octant_codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace octarl {

namespace {

bool power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

int log2i(int v) {
    int l = 0;
    while ((1 << l) < v) ++l;
    return l;
}

}  // namespace

uint32_t morton_encode(int x, int y, int z, int side) {
    require(power_of_two(side), "morton: side must be a power of two");
    require(x >= 0 && x < side && y >= 0 && y < side && z >= 0 && z < side,
            "morton: coordinate out of range");
    const int bits = log2i(side);
    uint32_t code = 0;
    for (int b = 0; b < bits; ++b) {
        code |= static_cast<uint32_t>((x >> b) & 1) << (3 * b);
        code |= static_cast<uint32_t>((y >> b) & 1) << (3 * b + 1);
        code |= static_cast<uint32_t>((z >> b) & 1) << (3 * b + 2);
    }
    return code;
}

std::array<int, 3> morton_decode(uint32_t code, int side) {
    require(power_of_two(side), "morton: side must be a power of two");
    const int bits = log2i(side);
    require(code < (uint32_t{1} << (3 * bits)), "morton: code out of range");
    int x = 0, y = 0, z = 0;
    for (int b = 0; b < bits; ++b) {
        x |= static_cast<int>((code >> (3 * b)) & 1) << b;
        y |= static_cast<int>((code >> (3 * b + 1)) & 1) << b;
        z |= static_cast<int>((code >> (3 * b + 2)) & 1) << b;
    }
    return {x, y, z};
}

std::vector<PositionIndex> morton_enumeration(int side) {
    std::vector<PositionIndex> out;
    const uint32_t n = static_cast<uint32_t>(side) * side * side;
    out.reserve(n);
    for (uint32_t code = 0; code < n; ++code) {
        const auto [x, y, z] = morton_decode(code, side);
        out.push_back({x, y, z, code});
    }
    return out;
}

LatentGrid encode_latent(const VoxelGrid& grid) {
    require(grid.dx() % 4 == 0 && grid.dy() % 4 == 0 && grid.dz() % 4 == 0,
            "encode_latent: dims must be divisible by 4");
    LatentGrid lat(grid.dx() / 4, grid.dy() / 4, grid.dz() / 4);
    for (int cz = 0; cz < lat.sz; ++cz)
        for (int cy = 0; cy < lat.sy; ++cy)
            for (int cx = 0; cx < lat.sx; ++cx)
                for (int c = 0; c < 8; ++c) {
                    const int ox = 4 * cx + 2 * (c & 1);
                    const int oy = 4 * cy + 2 * ((c >> 1) & 1);
                    const int oz = 4 * cz + 2 * ((c >> 2) & 1);
                    int count = 0;
                    for (int dz = 0; dz < 2; ++dz)
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx)
                                count += grid.at(ox + dx, oy + dy, oz + dz) ? 1 : 0;
                    lat.set(cx, cy, cz, c, static_cast<float>(count) / 8.0f);
                }
    return lat;
}

VoxelGrid decode_latent(const LatentGrid& lat, double cell_size) {
    require(lat.sx > 0 && lat.sy > 0 && lat.sz > 0, "decode_latent: empty latent");
    VoxelGrid grid(lat.sx * 4, lat.sy * 4, lat.sz * 4, cell_size);
    for (int cz = 0; cz < lat.sz; ++cz)
        for (int cy = 0; cy < lat.sy; ++cy)
            for (int cx = 0; cx < lat.sx; ++cx)
                for (int c = 0; c < 8; ++c) {
                    if (lat.at(cx, cy, cz, c) < 0.5f) continue;
                    const int ox = 4 * cx + 2 * (c & 1);
                    const int oy = 4 * cy + 2 * ((c >> 1) & 1);
                    const int oz = 4 * cz + 2 * ((c >> 2) & 1);
                    for (int dz = 0; dz < 2; ++dz)
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx)
                                grid.set(ox + dx, oy + dy, oz + dz, true);
                }
    return grid;
}

OctantSequence group(const LatentGrid& lat, int depth) {
    require(depth >= 1 && depth <= 4, "group: depth must be in [1,4]");
    require(lat.cubic(), "group: latent grid must be cubic");
    require(power_of_two(lat.sx), "group: latent side must be a power of two");
    const int grid_side = 1 << depth;
    require(lat.sx >= grid_side,
            "group: depth/dims mismatch: latent side " + std::to_string(lat.sx) +
                " too small for depth " + std::to_string(depth));
    const int s = lat.sx / grid_side;

    OctantSequence seq;
    seq.depth = depth;
    seq.block_cells = s;
    seq.positions = morton_enumeration(grid_side);
    const int width = seq.width();
    seq.features.resize(seq.positions.size() * static_cast<size_t>(width));

    const int cells_per_block = s * s * s;
    for (size_t t = 0; t < seq.positions.size(); ++t) {
        const auto& pos = seq.positions[t];
        float* out = seq.features.data() + t * static_cast<size_t>(width);
        for (int j = 0; j < cells_per_block; ++j) {
            const auto [lx, ly, lz] = morton_decode(static_cast<uint32_t>(j), s);
            const int cx = pos.x * s + lx;
            const int cy = pos.y * s + ly;
            const int cz = pos.z * s + lz;
            for (int c = 0; c < 8; ++c) out[j * 8 + c] = lat.at(cx, cy, cz, c);
        }
    }
    return seq;
}

LatentGrid ungroup(const OctantSequence& seq) {
    require(seq.has_features(), "ungroup: indices-only sequence; dequantize first");
    require(seq.depth >= 1 && seq.depth <= 4, "ungroup: bad depth");
    const int grid_side = 1 << seq.depth;
    const size_t expect = static_cast<size_t>(grid_side) * grid_side * grid_side;
    require(seq.length() == expect, "ungroup: length does not match depth");
    require(seq.features.size() == expect * static_cast<size_t>(seq.width()),
            "ungroup: feature buffer size mismatch");
    const auto canonical = morton_enumeration(grid_side);
    for (size_t i = 0; i < expect; ++i) {
        const auto& p = seq.positions[i];
        const auto& c = canonical[i];
        require(p.x == c.x && p.y == c.y && p.z == c.z && p.morton == c.morton,
                "ungroup: positions-not-morton");
    }

    const int s = seq.block_cells;
    LatentGrid lat(grid_side * s, grid_side * s, grid_side * s);
    const int cells_per_block = s * s * s;
    for (size_t t = 0; t < expect; ++t) {
        const auto& pos = seq.positions[t];
        const float* in = seq.feature(t);
        for (int j = 0; j < cells_per_block; ++j) {
            const auto [lx, ly, lz] = morton_decode(static_cast<uint32_t>(j), s);
            for (int c = 0; c < 8; ++c)
                lat.set(pos.x * s + lx, pos.y * s + ly, pos.z * s + lz, c, in[j * 8 + c]);
        }
    }
    return lat;
}

double locality_stats(const std::vector<std::array<int, 3>>& order) {
    require(!order.empty(), "locality_stats: empty order");
    if (order.size() == 1) return 0.0;
    const int side = static_cast<int>(std::lround(std::cbrt(static_cast<double>(order.size()))));
    require(static_cast<size_t>(side) * side * side == order.size(),
            "locality_stats: not-a-permutation (size is not a cube)");
    std::vector<char> seen(order.size(), 0);
    for (const auto& p : order) {
        require(p[0] >= 0 && p[0] < side && p[1] >= 0 && p[1] < side && p[2] >= 0 && p[2] < side,
                "locality_stats: not-a-permutation (coordinate out of range)");
        const size_t i = (static_cast<size_t>(p[2]) * side + p[1]) * side + p[0];
        require(!seen[i], "locality_stats: not-a-permutation (repeat)");
        seen[i] = 1;
    }
    int64_t total = 0;
    for (size_t i = 1; i < order.size(); ++i) {
        const int dx = std::abs(order[i][0] - order[i - 1][0]);
        const int dy = std::abs(order[i][1] - order[i - 1][1]);
        const int dz = std::abs(order[i][2] - order[i - 1][2]);
        total += std::max({dx, dy, dz});
    }
    return static_cast<double>(total) / static_cast<double>(order.size() - 1);
}

namespace {

constexpr char kTokenMagic[4] = {'C', 'R', 'T', 'K'};
constexpr uint32_t kTokenVersion = 1;

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

void save_tokens(const std::string& path, const OctantSequence& seq, uint32_t vocab) {
    require(seq.has_features() == (vocab == 0),
            "save_tokens: vocab must be 0 for feature sequences and nonzero for index sequences");
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open for writing: " + path);
    out.write(kTokenMagic, 4);
    write_u32(out, kTokenVersion);
    write_u32(out, static_cast<uint32_t>(seq.depth));
    write_u32(out, static_cast<uint32_t>(seq.length()));
    write_u32(out, vocab);
    if (vocab == 0) {
        for (float f : seq.features) {
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            write_u32(out, bits);
        }
    } else {
        for (uint16_t ix : seq.indices) {
            require(ix < vocab, "save_tokens: index out of vocab range");
            const unsigned char b[2] = {static_cast<unsigned char>(ix),
                                        static_cast<unsigned char>(ix >> 8)};
            out.write(reinterpret_cast<const char*>(b), 2);
        }
    }
    require(out.good(), "write failed: " + path);
}

OctantSequence load_tokens(const std::string& path, uint32_t* vocab_out) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kTokenMagic, 4) != 0) fail("bad-magic: not a CRTK file: " + path);
    const uint32_t version = read_u32(in, "version");
    require(version == kTokenVersion, "unsupported CRTK version");
    const uint32_t depth = read_u32(in, "depth");
    require(depth >= 1 && depth <= 4, "CRTK depth out of range");
    const uint32_t count = read_u32(in, "count");
    const uint32_t grid_side = 1u << depth;
    require(count == grid_side * grid_side * grid_side, "CRTK count does not match depth");
    const uint32_t vocab = read_u32(in, "vocab");
    if (vocab_out) *vocab_out = vocab;

    OctantSequence seq;
    seq.depth = static_cast<int>(depth);
    seq.positions = morton_enumeration(static_cast<int>(grid_side));
    if (vocab == 0) {
        in.seekg(0, std::ios::end);
        const auto end = in.tellg();
        in.seekg(20, std::ios::beg);
        const int64_t payload = static_cast<int64_t>(end) - 20;
        require(payload > 0 && payload % 4 == 0 &&
                    (payload / 4) % static_cast<int64_t>(count) == 0,
                "CRTK feature payload size mismatch");
        const int64_t width = payload / 4 / count;
        const int s = static_cast<int>(std::lround(std::cbrt(static_cast<double>(width) / 8.0)));
        require(static_cast<int64_t>(s) * s * s * 8 == width && power_of_two(s),
                "CRTK feature width is not a valid block shape");
        seq.block_cells = s;
        seq.features.resize(static_cast<size_t>(payload / 4));
        for (auto& f : seq.features) {
            const uint32_t bits = read_u32(in, "feature");
            std::memcpy(&f, &bits, 4);
        }
    } else {
        seq.block_cells = 0;  // unknown without a codebook; set by dequantize
        seq.indices.resize(count);
        for (auto& ix : seq.indices) {
            unsigned char b[2];
            in.read(reinterpret_cast<char*>(b), 2);
            if (!in) fail("truncated-payload: reading index");
            ix = static_cast<uint16_t>(b[0] | (b[1] << 8));
            require(ix < vocab, "CRTK index out of vocab range");
        }
    }
    return seq;
}

}  // namespace octarl
