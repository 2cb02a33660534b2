#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "octarl/voxel_grid.hpp"

namespace octarl {

// Analytic latent volume: one cell per 4x4x4 voxel block, 8 channels per cell.
// Channel c holds the occupancy fraction of the c-th 2x2x2 sub-octant of the
// block, sub-octants ordered by the 3-bit code z*4 + y*2 + x. All channels lie
// in {0, 1/8, ..., 1}.
struct LatentGrid {
    int sx = 0, sy = 0, sz = 0;
    std::vector<float> channels;  // sx*sy*sz*8, x-fastest cells, 8 channels each

    LatentGrid() = default;
    LatentGrid(int sx_, int sy_, int sz_)
        : sx(sx_), sy(sy_), sz(sz_),
          channels(static_cast<size_t>(sx_) * sy_ * sz_ * 8, 0.0f) {}

    float at(int x, int y, int z, int c) const { return channels[offset(x, y, z, c)]; }
    void set(int x, int y, int z, int c, float v) { channels[offset(x, y, z, c)] = v; }

    size_t offset(int x, int y, int z, int c) const {
        return (static_cast<size_t>(z) * sy + y) * sx * 8 + static_cast<size_t>(x) * 8 +
               static_cast<size_t>(c);
    }
    bool cubic() const { return sx == sy && sy == sz; }
};

struct PositionIndex {
    int x = 0, y = 0, z = 0;
    uint32_t morton = 0;
};

// Octant token sequence in Morton order over the block grid. Holds either raw
// features (width = block_cells^3 * 8 floats per token) or quantized codebook
// indices, never both.
struct OctantSequence {
    int depth = 3;        // block grid side = 2^depth, token count = 8^depth
    int block_cells = 2;  // latent cells per block edge
    std::vector<float> features;    // length*width, row-major; empty if quantized
    std::vector<uint16_t> indices;  // length entries if quantized
    std::vector<PositionIndex> positions;

    size_t length() const { return positions.size(); }
    int width() const { return block_cells * block_cells * block_cells * 8; }
    bool has_features() const { return !features.empty(); }
    const float* feature(size_t token) const { return features.data() + token * width(); }
};

// Morton (Z-order) code over a cubic power-of-two grid; x occupies bit 0 of
// each bit triple, y bit 1, z bit 2.
uint32_t morton_encode(int x, int y, int z, int side);
std::array<int, 3> morton_decode(uint32_t code, int side);

// Morton-order enumeration of all positions of a side^3 block grid.
std::vector<PositionIndex> morton_enumeration(int side);

LatentGrid encode_latent(const VoxelGrid& grid);

// Sub-octant filled iff its channel >= 0.5 (inclusive). Exact inverse of
// encode_latent whenever every 2x2x2 sub-octant is uniformly full or empty.
VoxelGrid decode_latent(const LatentGrid& lat, double cell_size = 1.0 / 64.0);

// Serializes a cubic latent grid into 8^depth tokens. The latent side must be
// a power of two and at least 2^depth; each token concatenates the channels of
// one (side/2^depth)^3 cell block, cells in intra-block Morton order,
// channel-minor. depth 3 on a 16^3 latent gives the 512 x 64 layout.
OctantSequence group(const LatentGrid& lat, int depth);

// Exact inverse of group for feature sequences. Rejects quantized sequences
// and any positions vector that is not the Morton enumeration.
LatentGrid ungroup(const OctantSequence& seq);

// Mean Chebyshev distance between consecutive positions of a block-grid
// permutation; single-element orders are 0 by convention.
double locality_stats(const std::vector<std::array<int, 3>>& order);

// "CRTK" token file: magic, u32 version=1, u32 depth, u32 count, u32 vocab
// (0 => feature payload), then u16 LE indices or f32 LE features row-major.
void save_tokens(const std::string& path, const OctantSequence& seq, uint32_t vocab);
OctantSequence load_tokens(const std::string& path, uint32_t* vocab_out = nullptr);

}  // namespace octarl
