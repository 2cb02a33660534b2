#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "octarl/octant_codec.hpp"

namespace octarl {

// Real-valued code table for vector quantization of octant features.
struct Codebook {
    int k = 0;    // entry count
    int dim = 0;  // feature width
    std::vector<float> codes;  // k*dim row-major

    const float* code(int i) const { return codes.data() + static_cast<size_t>(i) * dim; }
};

// Nearest neighbor under squared Euclidean distance, ties broken by lowest
// index. This brute-force scan is the definition; any accelerated path must
// reproduce it exactly.
int nearest_code(const Codebook& cb, const float* feature);

// Maps every token to its nearest code. Feature width must equal cb.dim.
OctantSequence quantize(const OctantSequence& seq, const Codebook& cb);

// Index lookup back to features; quantize(dequantize(ix)) == ix.
OctantSequence dequantize(const OctantSequence& seq, const Codebook& cb);

// k-means with k-means++ seeding and Lloyd iterations. Empty clusters are
// reseeded to the point farthest from its assigned centroid; duplicate rows
// are reseeded the same way after training. Deterministic given (data order,
// seed). Data is row-major n x dim. If distortion_history is non-null it
// receives the mean squared assignment distance at every iteration, which is
// non-increasing.
Codebook train_kmeans(const std::vector<float>& data, int n, int dim, int k, int iters,
                      uint64_t seed, std::vector<double>* distortion_history = nullptr);

// Mean squared distance of every point to its nearest code.
double distortion(const Codebook& cb, const std::vector<float>& data, int n, int dim);

// Fraction of codebook entries assigned at least once.
double utilization(const std::vector<uint16_t>& indices, int k);

// "CRCB" codebook file: magic, u32 K, u32 dim, f32 LE codes row-major.
void save_codebook(const std::string& path, const Codebook& cb);
Codebook load_codebook(const std::string& path);

// Gathers the per-token features of a set of grids at the given depth into one
// row-major training matrix.
std::vector<float> collect_features(const std::vector<VoxelGrid>& grids, int depth, int* dim_out,
                                    int* count_out);

}  // namespace octarl
