#include "octarl/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace octarl {

namespace {

double sq_dist(const float* a, const float* b, int dim) {
    double d = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        d += diff * diff;
    }
    return d;
}

}  // namespace

int nearest_code(const Codebook& cb, const float* feature) {
    int best = 0;
    double best_d = sq_dist(cb.code(0), feature, cb.dim);
    for (int i = 1; i < cb.k; ++i) {
        const double d = sq_dist(cb.code(i), feature, cb.dim);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

OctantSequence quantize(const OctantSequence& seq, const Codebook& cb) {
    require(seq.has_features(), "quantize: sequence has no features");
    require(seq.width() == cb.dim, "quantize: feature width " + std::to_string(seq.width()) +
                                       " != codebook dim " + std::to_string(cb.dim));
    OctantSequence out;
    out.depth = seq.depth;
    out.block_cells = seq.block_cells;
    out.positions = seq.positions;
    out.indices.resize(seq.length());
    for (size_t t = 0; t < seq.length(); ++t)
        out.indices[t] = static_cast<uint16_t>(nearest_code(cb, seq.feature(t)));
    return out;
}

OctantSequence dequantize(const OctantSequence& seq, const Codebook& cb) {
    require(!seq.indices.empty(), "dequantize: sequence has no indices");
    const int s = static_cast<int>(std::lround(std::cbrt(cb.dim / 8.0)));
    require(s * s * s * 8 == cb.dim, "dequantize: codebook dim is not a valid block shape");
    OctantSequence out;
    out.depth = seq.depth;
    out.block_cells = s;
    out.positions = seq.positions;
    out.features.resize(seq.indices.size() * static_cast<size_t>(cb.dim));
    for (size_t t = 0; t < seq.indices.size(); ++t) {
        const uint16_t ix = seq.indices[t];
        require(ix < cb.k, "dequantize: index " + std::to_string(ix) + " out of range for K=" +
                               std::to_string(cb.k));
        std::memcpy(out.features.data() + t * static_cast<size_t>(cb.dim), cb.code(ix),
                    static_cast<size_t>(cb.dim) * sizeof(float));
    }
    return out;
}

namespace {

// Index of the point with the largest distance to its assigned centroid,
// skipping points equal to an existing code row. Used to reseed empty or
// duplicate clusters.
int farthest_point(const std::vector<float>& data, int n, int dim, const Codebook& cb,
                   const std::vector<int>& assign) {
    int best = -1;
    double best_d = -1.0;
    for (int p = 0; p < n; ++p) {
        const float* x = &data[static_cast<size_t>(p) * dim];
        const double d = sq_dist(x, cb.code(assign[p]), dim);
        if (d > best_d) {
            bool dup = false;
            for (int c = 0; c < cb.k && !dup; ++c)
                dup = std::memcmp(x, cb.code(c), static_cast<size_t>(dim) * sizeof(float)) == 0;
            if (!dup) {
                best_d = d;
                best = p;
            }
        }
    }
    return best;
}

}  // namespace

Codebook train_kmeans(const std::vector<float>& data, int n, int dim, int k, int iters,
                      uint64_t seed, std::vector<double>* distortion_history) {
    if (distortion_history) distortion_history->clear();
    require(k >= 2, "train_kmeans: K must be >= 2");
    require(dim > 0, "train_kmeans: dim must be positive");
    require(n >= k, "too-few-samples: need at least K=" + std::to_string(k) + " tokens, got " +
                        std::to_string(n));
    require(data.size() == static_cast<size_t>(n) * dim, "train_kmeans: data size mismatch");

    Codebook cb;
    cb.k = k;
    cb.dim = dim;
    cb.codes.resize(static_cast<size_t>(k) * dim);
    Rng rng(seed);

    // k-means++ seeding: first center uniform, then proportional to squared
    // distance from the nearest chosen center.
    std::vector<double> d2(static_cast<size_t>(n), 0.0);
    {
        const int first = static_cast<int>(rng.uniform_index(static_cast<uint64_t>(n)));
        std::memcpy(cb.codes.data(), &data[static_cast<size_t>(first) * dim],
                    static_cast<size_t>(dim) * sizeof(float));
        for (int p = 0; p < n; ++p)
            d2[p] = sq_dist(&data[static_cast<size_t>(p) * dim], cb.code(0), dim);
        for (int c = 1; c < k; ++c) {
            double total = 0.0;
            for (double v : d2) total += v;
            int chosen;
            if (total <= 0.0) {
                chosen = static_cast<int>(rng.uniform_index(static_cast<uint64_t>(n)));
            } else {
                double target = rng.uniform() * total;
                chosen = n - 1;
                for (int p = 0; p < n; ++p) {
                    target -= d2[p];
                    if (target <= 0.0) {
                        chosen = p;
                        break;
                    }
                }
            }
            std::memcpy(&cb.codes[static_cast<size_t>(c) * dim],
                        &data[static_cast<size_t>(chosen) * dim],
                        static_cast<size_t>(dim) * sizeof(float));
            for (int p = 0; p < n; ++p) {
                const double d = sq_dist(&data[static_cast<size_t>(p) * dim], cb.code(c), dim);
                if (d < d2[p]) d2[p] = d;
            }
        }
    }

    std::vector<int> assign(static_cast<size_t>(n), 0);
    std::vector<double> sums(static_cast<size_t>(k) * dim);
    std::vector<int64_t> counts(static_cast<size_t>(k));
    for (int iter = 0; iter < iters; ++iter) {
        for (int p = 0; p < n; ++p)
            assign[p] = nearest_code(cb, &data[static_cast<size_t>(p) * dim]);
        if (distortion_history) {
            double total = 0.0;
            for (int p = 0; p < n; ++p)
                total += sq_dist(&data[static_cast<size_t>(p) * dim], cb.code(assign[p]), dim);
            distortion_history->push_back(total / n);
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (int p = 0; p < n; ++p) {
            const float* x = &data[static_cast<size_t>(p) * dim];
            double* s = &sums[static_cast<size_t>(assign[p]) * dim];
            for (int i = 0; i < dim; ++i) s[i] += x[i];
            ++counts[assign[p]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            float* row = &cb.codes[static_cast<size_t>(c) * dim];
            for (int i = 0; i < dim; ++i)
                row[i] = static_cast<float>(sums[static_cast<size_t>(c) * dim + i] / counts[c]);
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            const int p = farthest_point(data, n, dim, cb, assign);
            if (p < 0) break;  // fewer distinct points than clusters
            std::memcpy(&cb.codes[static_cast<size_t>(c) * dim], &data[static_cast<size_t>(p) * dim],
                        static_cast<size_t>(dim) * sizeof(float));
        }
    }

    // Dedup: identical rows collapse assignments onto the lowest index, so any
    // later duplicate is reseeded like an empty cluster.
    for (int p = 0; p < n; ++p) assign[p] = nearest_code(cb, &data[static_cast<size_t>(p) * dim]);
    for (int c = 1; c < k; ++c) {
        bool dup = false;
        for (int c2 = 0; c2 < c && !dup; ++c2)
            dup = std::memcmp(cb.code(c), cb.code(c2), static_cast<size_t>(dim) * sizeof(float)) ==
                  0;
        if (!dup) continue;
        const int p = farthest_point(data, n, dim, cb, assign);
        if (p < 0) break;
        std::memcpy(&cb.codes[static_cast<size_t>(c) * dim], &data[static_cast<size_t>(p) * dim],
                    static_cast<size_t>(dim) * sizeof(float));
        for (int q = 0; q < n; ++q) assign[q] = nearest_code(cb, &data[static_cast<size_t>(q) * dim]);
    }
    return cb;
}

double distortion(const Codebook& cb, const std::vector<float>& data, int n, int dim) {
    require(dim == cb.dim, "distortion: dim mismatch");
    double total = 0.0;
    for (int p = 0; p < n; ++p) {
        const float* x = &data[static_cast<size_t>(p) * dim];
        total += sq_dist(x, cb.code(nearest_code(cb, x)), dim);
    }
    return n > 0 ? total / n : 0.0;
}

double utilization(const std::vector<uint16_t>& indices, int k) {
    require(k > 0, "utilization: K must be positive");
    std::vector<char> used(static_cast<size_t>(k), 0);
    for (uint16_t ix : indices) {
        if (ix < k) used[ix] = 1;
    }
    int64_t distinct = 0;
    for (char u : used) distinct += u;
    return static_cast<double>(distinct) / static_cast<double>(k);
}

namespace {

constexpr char kCodebookMagic[4] = {'C', 'R', 'C', 'B'};

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

void save_codebook(const std::string& path, const Codebook& cb) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open for writing: " + path);
    out.write(kCodebookMagic, 4);
    write_u32(out, static_cast<uint32_t>(cb.k));
    write_u32(out, static_cast<uint32_t>(cb.dim));
    for (float f : cb.codes) {
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        write_u32(out, bits);
    }
    require(out.good(), "write failed: " + path);
}

Codebook load_codebook(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCodebookMagic, 4) != 0)
        fail("bad-magic: not a CRCB file: " + path);
    Codebook cb;
    cb.k = static_cast<int>(read_u32(in, "K"));
    cb.dim = static_cast<int>(read_u32(in, "dim"));
    require(cb.k >= 2 && cb.k <= 65536 && cb.dim > 0 && cb.dim <= (1 << 20),
            "CRCB header out of range");
    cb.codes.resize(static_cast<size_t>(cb.k) * cb.dim);
    for (auto& f : cb.codes) {
        const uint32_t bits = read_u32(in, "code");
        std::memcpy(&f, &bits, 4);
    }
    return cb;
}

std::vector<float> collect_features(const std::vector<VoxelGrid>& grids, int depth, int* dim_out,
                                    int* count_out) {
    require(!grids.empty(), "collect_features: no grids");
    std::vector<float> data;
    int dim = -1;
    int count = 0;
    for (const auto& g : grids) {
        const OctantSequence seq = group(encode_latent(g), depth);
        if (dim < 0) dim = seq.width();
        require(dim == seq.width(), "collect_features: inconsistent widths across grids");
        data.insert(data.end(), seq.features.begin(), seq.features.end());
        count += static_cast<int>(seq.length());
    }
    if (dim_out) *dim_out = dim;
    if (count_out) *count_out = count;
    return data;
}

}  // namespace octarl
