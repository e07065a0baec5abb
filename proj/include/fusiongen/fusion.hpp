#pragma once

#include <filesystem>

#include "fusiongen/rng.hpp"
#include "fusiongen/tensor.hpp"

namespace fusiongen {

/// Per-layer feature maps from one encoder pass, shallow first,
/// bottleneck last.
struct FeatureStack {
    std::vector<Tensor3> layers;
};

struct FusionConfig {
    double alpha = 0.2;     // fraction of bottleneck positions replaced
    std::uint64_t seed = 0;
};

/// One sampled bottleneck position and its resolved source match.
struct FusionSelection {
    int flat = 0;            // c * T' + t
    int channel = 0;
    int t = 0;
    int match_flat = -1;     // source position, -1 when the target kept its own feature
    double similarity = 0.0;
    bool replaced = false;
};

/// Replacement region projected onto one shallower layer.
struct LayerRegion {
    int channel = 0;
    int t_begin = 0;
    int t_end = 0;  // half-open window, same coordinates on target and source
};

struct FusionPlan {
    int channels = 0;
    int t_bottleneck = 0;
    int depth = 0;
    std::vector<FusionSelection> selected;
    // layer_regions[l] holds the windows for stack layer l (bottleneck layer
    // excluded: its replacement uses the matched source positions directly).
    std::vector<std::vector<LayerRegion>> layer_regions;
};

/// Reshapes a (d, C, T') map into N = C*T' depth-d column vectors; the vector
/// at flat index q = c*T' + t is F[:, c, t].
std::vector<std::vector<double>> vectorize(const Tensor3& f);

/// Inverse of vectorize.
Tensor3 reassemble(const std::vector<std::vector<double>>& vectors, int depth, int channels,
                   int t);

struct MatchResult {
    std::vector<int> match;        // per query: best source index, -1 when kept
    std::vector<double> similarity;
};

/// Cosine argmax of each queried target vector over all source vectors.
/// Ties break to the lowest source index. Zero-norm sources score -inf;
/// a zero-norm target keeps its own feature (match -1).
MatchResult match_features(const std::vector<std::vector<double>>& targets,
                           const std::vector<std::vector<double>>& sources,
                           const std::vector<int>& queries);

/// Samples k = round(alpha*N) positions without replacement, matches them
/// against the source map and substitutes the winners.
std::pair<Tensor3, FusionPlan> fuse_bottleneck(const Tensor3& f_target, const Tensor3& f_source,
                                               const FusionConfig& cfg);

/// Fills plan.layer_regions for the given per-layer time lengths
/// (shallow first, bottleneck last).
void compute_layer_regions(FusionPlan& plan, const std::vector<int>& layer_times);

/// Applies the plan to a whole stack: bottleneck positions take their matched
/// source vectors; every shallower layer copies the source features inside
/// the projected (channel, time-window) regions. Untouched positions are
/// bit-identical to the target stack.
FeatureStack propagate_plan(const FusionPlan& plan, const FeatureStack& target_stack,
                            const FeatureStack& source_stack);

/// Debug dump: selections, matches, similarities and regions as JSON.
void write_plan(const FusionPlan& plan, const std::filesystem::path& path);

}  // namespace fusiongen
