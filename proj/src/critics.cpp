#include "octarl/critics.hpp"

#include <algorithm>
#include <cmath>

namespace octarl {

void CriticWeights::normalize() {
    require(h >= 0 && v >= 0 && x >= 0 && p >= 0, "critic weights must be nonnegative");
    const double sum = h + v + x + p;
    require(sum > 0, "critic weights must not all be zero");
    h /= sum;
    v /= sum;
    x /= sum;
    p /= sum;
}

void PhysicalWeights::normalize() {
    require(stab >= 0 && rig >= 0 && inter >= 0, "physical weights must be nonnegative");
    const double sum = stab + rig + inter;
    require(sum > 0, "physical weights must not all be zero");
    stab /= sum;
    rig /= sum;
    inter /= sum;
}

double r_stab(const TriMesh& mesh, double degenerate_scale) {
    require(!mesh.empty(), "r_stab: empty mesh");
    const Vec3 com = center_of_mass(mesh);
    const Hull2D hull = convex_hull_2d(support_footprint(mesh));
    const double d = point_hull_distance({com.x, com.y}, hull);
    if (d <= 0) return 1.0;
    double min_x = hull.points[0].x, max_x = min_x;
    double min_y = hull.points[0].y, max_y = min_y;
    for (const auto& pt : hull.points) {
        min_x = std::min(min_x, pt.x);
        max_x = std::max(max_x, pt.x);
        min_y = std::min(min_y, pt.y);
        max_y = std::max(max_y, pt.y);
    }
    double diag = std::hypot(max_x - min_x, max_y - min_y);
    if (diag <= 0) diag = degenerate_scale;
    return std::max(0.0, 1.0 - d / diag);
}

double r_rig(const TriMesh& mesh) {
    require(!mesh.empty(), "r_rig: empty mesh");
    const auto components = connected_components(mesh);
    return static_cast<double>(components.front()) / static_cast<double>(mesh.face_count());
}

double r_int(const TriMesh& mesh) {
    if (mesh.empty()) return 1.0;
    const double pairs = static_cast<double>(intersecting_pairs(mesh, true));
    const double faces = static_cast<double>(mesh.face_count());
    return 1.0 - std::min(1.0, 2.0 * pairs / faces);
}

double physical_score(const TriMesh& mesh, const PhysicalWeights& lambda,
                      double degenerate_scale) {
    const double sum = lambda.stab + lambda.rig + lambda.inter;
    require(std::abs(sum - 1.0) < 1e-9, "physical weights must be normalized");
    return lambda.stab * r_stab(mesh, degenerate_scale) + lambda.rig * r_rig(mesh) +
           lambda.inter * r_int(mesh);
}

double aggregate(const RewardBreakdown& breakdown, const CriticWeights& weights) {
    for (double r : {breakdown.r_h, breakdown.r_v, breakdown.r_x, breakdown.r_p})
        require(std::isfinite(r) && r >= 0.0 && r <= 1.0,
                "aggregate: component out of [0,1]: " + std::to_string(r));
    const double wsum = weights.h + weights.v + weights.x + weights.p;
    require(std::abs(wsum - 1.0) < 1e-9, "aggregate: weights must be normalized");
    return weights.h * breakdown.r_h + weights.v * breakdown.r_v + weights.x * breakdown.r_x +
           weights.p * breakdown.r_p;
}

namespace {

class ConstantCritic : public Critic {
public:
    explicit ConstantCritic(double value) : value_(value) {
        require(value >= 0.0 && value <= 1.0, "constant critic value out of [0,1]");
    }
    std::string name() const override { return "constant"; }
    double score(const Artifact&) const override { return value_; }

private:
    double value_;
};

class OccupancyBandCritic : public Critic {
public:
    OccupancyBandCritic(double lo, double hi) : lo_(lo), hi_(hi) {
        require(0.0 <= lo && lo <= hi && hi <= 1.0, "occupancy_band needs 0 <= lo <= hi <= 1");
    }
    std::string name() const override { return "occupancy_band"; }
    double score(const Artifact& artifact) const override {
        require(artifact.grid != nullptr, "occupancy_band critic needs a voxel grid");
        const double fill = artifact.grid->fill_fraction();
        if (fill >= lo_ && fill <= hi_) return 1.0;
        if (fill < lo_) return lo_ > 0.0 ? fill / lo_ : 1.0;
        return hi_ < 1.0 ? (1.0 - fill) / (1.0 - hi_) : 1.0;
    }

private:
    double lo_, hi_;
};

class SeededHashNoiseCritic : public Critic {
public:
    SeededHashNoiseCritic(double sigma, uint64_t seed) : sigma_(sigma), seed_(seed) {
        require(sigma >= 0.0, "noise sigma must be nonnegative");
    }
    std::string name() const override { return "seeded_hash_noise"; }
    double score(const Artifact& artifact) const override {
        uint64_t h = seed_ ^ 0x9e3779b97f4a7c15ULL;
        auto mix = [&h](uint64_t v) {
            h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            h *= 0xff51afd7ed558ccdULL;
            h ^= h >> 33;
        };
        mix(static_cast<uint64_t>(artifact.prompt_id));
        if (artifact.grid) {
            mix(static_cast<uint64_t>(artifact.grid->dx()));
            for (uint64_t w : artifact.grid->words()) mix(w);
        } else if (artifact.mesh) {
            mix(artifact.mesh->face_count());
            mix(artifact.mesh->vertices.size());
        }
        const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
        return std::clamp(0.5 + sigma_ * (2.0 * u - 1.0), 0.0, 1.0);
    }

private:
    double sigma_;
    uint64_t seed_;
};

class OracleAlignmentCritic : public Critic {
public:
    explicit OracleAlignmentCritic(std::map<int, VoxelGrid> templates)
        : templates_(std::move(templates)) {
        require(!templates_.empty(), "oracle critic needs at least one template");
    }
    explicit OracleAlignmentCritic(VoxelGrid shared) { shared_.push_back(std::move(shared)); }
    std::string name() const override { return "oracle_iou"; }
    double score(const Artifact& artifact) const override {
        require(artifact.grid != nullptr, "oracle critic needs a voxel grid");
        auto it = templates_.find(artifact.prompt_id);
        if (it != templates_.end()) return iou(*artifact.grid, it->second);
        require(!shared_.empty(),
                "oracle critic has no template for prompt " + std::to_string(artifact.prompt_id));
        return iou(*artifact.grid, shared_.front());
    }

private:
    std::map<int, VoxelGrid> templates_;
    std::vector<VoxelGrid> shared_;  // 0 or 1 entries
};

class PhysicalCoherenceCritic : public Critic {
public:
    explicit PhysicalCoherenceCritic(const PhysicalWeights& lambda) : lambda_(lambda) {
        lambda_.normalize();
    }
    std::string name() const override { return "physical"; }
    double score(const Artifact& artifact) const override {
        require(artifact.mesh != nullptr, "physical critic needs a mesh");
        // An empty generation is physically vacuous, not a scoring failure.
        if (artifact.mesh->empty()) return 0.0;
        const double scale = artifact.grid ? artifact.grid->cell_size() : 1.0 / 64.0;
        return physical_score(*artifact.mesh, lambda_, scale);
    }

private:
    PhysicalWeights lambda_;
};

}  // namespace

std::shared_ptr<Critic> make_constant_critic(double value) {
    return std::make_shared<ConstantCritic>(value);
}

std::shared_ptr<Critic> make_occupancy_band_critic(double lo, double hi) {
    return std::make_shared<OccupancyBandCritic>(lo, hi);
}

std::shared_ptr<Critic> make_seeded_hash_noise_critic(double sigma, uint64_t seed) {
    return std::make_shared<SeededHashNoiseCritic>(sigma, seed);
}

std::shared_ptr<Critic> make_oracle_alignment_critic(std::map<int, VoxelGrid> templates) {
    return std::make_shared<OracleAlignmentCritic>(std::move(templates));
}

std::shared_ptr<Critic> make_oracle_alignment_critic(VoxelGrid shared_template) {
    return std::make_shared<OracleAlignmentCritic>(std::move(shared_template));
}

std::shared_ptr<Critic> make_physical_critic(const PhysicalWeights& lambda) {
    return std::make_shared<PhysicalCoherenceCritic>(lambda);
}

RewardBreakdown CriticStack::score_all(const Artifact& artifact) const {
    require(h && v && x && p, "critic stack has an empty slot");
    auto clamped = [&artifact](const Critic& critic) {
        const double s = critic.score(artifact);
        require(std::isfinite(s), "critic '" + critic.name() + "' returned a non-finite score");
        return std::clamp(s, 0.0, 1.0);
    };
    RewardBreakdown out;
    out.r_h = clamped(*h);
    out.r_v = clamped(*v);
    out.r_x = clamped(*x);
    out.r_p = clamped(*p);
    out.aggregate = aggregate(out, weights);
    return out;
}

}  // namespace octarl
