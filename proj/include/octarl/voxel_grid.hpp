#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "octarl/common.hpp"

namespace octarl {

// Bit-packed binary occupancy volume. Cells are linearized x-fastest, then y,
// then z. Dimensions must each be >= 4 and divisible by 4 (the latent codec
// maps 4x4x4 voxel blocks onto single latent cells).
class VoxelGrid {
public:
    VoxelGrid(int dx, int dy, int dz, double cell_size = 1.0 / 64.0);

    int dx() const { return dx_; }
    int dy() const { return dy_; }
    int dz() const { return dz_; }
    double cell_size() const { return cell_size_; }
    int64_t total_cells() const { return static_cast<int64_t>(dx_) * dy_ * dz_; }

    bool in_bounds(int x, int y, int z) const {
        return x >= 0 && x < dx_ && y >= 0 && y < dy_ && z >= 0 && z < dz_;
    }

    bool at(int x, int y, int z) const {
        const int64_t i = index(x, y, z);
        return (words_[static_cast<size_t>(i >> 6)] >> (i & 63)) & 1u;
    }

    void set(int x, int y, int z, bool occupied) {
        const int64_t i = index(x, y, z);
        const uint64_t mask = uint64_t{1} << (i & 63);
        if (occupied)
            words_[static_cast<size_t>(i >> 6)] |= mask;
        else
            words_[static_cast<size_t>(i >> 6)] &= ~mask;
    }

    int64_t occupied_count() const;
    double fill_fraction() const {
        return static_cast<double>(occupied_count()) / static_cast<double>(total_cells());
    }

    const std::vector<uint64_t>& words() const { return words_; }

    bool operator==(const VoxelGrid& other) const {
        return dx_ == other.dx_ && dy_ == other.dy_ && dz_ == other.dz_ && words_ == other.words_;
    }

private:
    int64_t index(int x, int y, int z) const {
        return x + static_cast<int64_t>(dx_) * (y + static_cast<int64_t>(dy_) * z);
    }

    int dx_, dy_, dz_;
    double cell_size_;
    std::vector<uint64_t> words_;
};

// Intersection over union of two equal sized grids. Two empty grids compare
// as identical, so the result is defined as 1.
double iou(const VoxelGrid& a, const VoxelGrid& b);

// "CRVX" grid file: magic, u32 LE version=1, u32 dx, dy, dz, then
// ceil(dx*dy*dz/8) payload bytes with bit 0 = first cell.
void save_grid(const std::string& path, const VoxelGrid& grid);
VoxelGrid load_grid(const std::string& path);

}  // namespace octarl
