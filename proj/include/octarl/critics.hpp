#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "octarl/hull.hpp"
#include "octarl/intersect.hpp"
#include "octarl/mesh.hpp"
#include "octarl/voxel_grid.hpp"

namespace octarl {

// What a critic gets to look at: the generated occupancy volume, its derived
// surface, and the prompt it was sampled for. grid may be null when scoring an
// imported mesh.
struct Artifact {
    const VoxelGrid* grid = nullptr;
    const TriMesh* mesh = nullptr;
    int prompt_id = 0;
};

// Pure scoring function into [0,1].
class Critic {
public:
    virtual ~Critic() = default;
    virtual std::string name() const = 0;
    virtual double score(const Artifact& artifact) const = 0;
};

struct RewardBreakdown {
    double r_h = 0, r_v = 0, r_x = 0, r_p = 0;
    double aggregate = 0;
};

struct CriticWeights {
    double h = 0.25, v = 0.25, x = 0.25, p = 0.25;
    void normalize();  // nonnegative, sum rescaled to 1
};

struct PhysicalWeights {
    double stab = 1.0 / 3.0, rig = 1.0 / 3.0, inter = 1.0 / 3.0;
    void normalize();
};

// Stability: distance d from the projected center of mass to the support
// footprint hull. 1 when the projection is inside; otherwise
// max(0, 1 - d/L) with L the footprint bounding-box diagonal
// (degenerate_scale when the footprint has no extent).
double r_stab(const TriMesh& mesh, double degenerate_scale = 1.0 / 64.0);

// Fraction of faces in the largest edge-connected component.
double r_rig(const TriMesh& mesh);

// 1 - min(1, 2P/F) with P the properly intersecting face pairs; an empty mesh
// scores 1.
double r_int(const TriMesh& mesh);

double physical_score(const TriMesh& mesh, const PhysicalWeights& lambda,
                      double degenerate_scale = 1.0 / 64.0);

// R = w_h r_h + w_v r_v + w_x r_x + w_p r_p. Components must already lie in
// [0,1] and weights must be normalized.
double aggregate(const RewardBreakdown& breakdown, const CriticWeights& weights);

// Built-in deterministic critics.
std::shared_ptr<Critic> make_constant_critic(double value);
std::shared_ptr<Critic> make_occupancy_band_critic(double lo, double hi);
std::shared_ptr<Critic> make_seeded_hash_noise_critic(double sigma, uint64_t seed);
// IoU of the artifact grid against the template registered for its prompt.
std::shared_ptr<Critic> make_oracle_alignment_critic(std::map<int, VoxelGrid> templates);
// Same template for every prompt.
std::shared_ptr<Critic> make_oracle_alignment_critic(VoxelGrid shared_template);
// Physical coherence; scores an empty artifact 0 rather than failing, so the
// trainer survives degenerate rollouts.
std::shared_ptr<Critic> make_physical_critic(const PhysicalWeights& lambda);

// Four critic slots plus their mixing weights.
struct CriticStack {
    CriticWeights weights;
    std::shared_ptr<Critic> h, v, x, p;

    // Scores all four slots (clamped into [0,1]) and aggregates.
    RewardBreakdown score_all(const Artifact& artifact) const;
};

}  // namespace octarl
