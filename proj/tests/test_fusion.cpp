#include <cmath>
#include <set>

#include "doctest.h"
#include "fusiongen/fusion.hpp"
#include "test_util.hpp"

using namespace fusiongen;

namespace {

Tensor3 random_map(int d, int c, int t, Rng& rng) {
    Tensor3 f(d, c, t);
    for (double& v : f.v) v = rng.normal();
    return f;
}

/// Brute-force cosine argmax, written independently of the library path.
int brute_force_match(const std::vector<double>& target,
                      const std::vector<std::vector<double>>& sources) {
    double tn = 0.0;
    for (double v : target) tn += v * v;
    tn = std::sqrt(tn);
    int best = -1;
    double best_sim = -1e300;
    for (std::size_t p = 0; p < sources.size(); ++p) {
        double sn = 0.0, dp = 0.0;
        for (std::size_t i = 0; i < sources[p].size(); ++i) {
            sn += sources[p][i] * sources[p][i];
            dp += target[i] * sources[p][i];
        }
        sn = std::sqrt(sn);
        if (sn == 0.0) continue;
        const double sim = dp / (tn * sn);
        if (sim > best_sim) {
            best_sim = sim;
            best = static_cast<int>(p);
        }
    }
    return best;
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("vectorize maps flat index c*T'+t to the depth column") {
    Tensor3 f(2, 1, 3);
    f.at(0, 0, 1) = 5.0;
    f.at(1, 0, 1) = 7.0;
    const auto vectors = vectorize(f);
    REQUIRE(vectors.size() == 3);
    CHECK(vectors[1] == std::vector<double>{5.0, 7.0});
}

TEST_CASE("reassemble inverts vectorize; N = C*T'") {
    Rng rng(1);
    for (int iter = 0; iter < 5; ++iter) {
        const int d = 1 + static_cast<int>(rng.uniform_int(5));
        const int c = 1 + static_cast<int>(rng.uniform_int(5));
        const int t = 1 + static_cast<int>(rng.uniform_int(8));
        const Tensor3 f = random_map(d, c, t, rng);
        const auto vectors = vectorize(f);
        CHECK(vectors.size() == static_cast<std::size_t>(c) * static_cast<std::size_t>(t));
        const Tensor3 back = reassemble(vectors, d, c, t);
        CHECK(back.v == f.v);
    }
}

TEST_CASE("collinear source wins the match") {
    const std::vector<std::vector<double>> targets = {{1.0, 0.0}};
    const std::vector<std::vector<double>> sources = {{0.0, 1.0}, {3.0, 0.0}};
    const MatchResult res = match_features(targets, sources, {0});
    CHECK(res.match[0] == 1);
    CHECK(res.similarity[0] == doctest::Approx(1.0));
}

TEST_CASE("exact similarity ties break to the lowest source index") {
    const std::vector<std::vector<double>> targets = {{1.0, 1.0}};
    const std::vector<std::vector<double>> sources = {{1.0, 0.0}, {0.0, 1.0}};
    const MatchResult res = match_features(targets, sources, {0});
    CHECK(res.match[0] == 0);
    CHECK(res.similarity[0] == doctest::Approx(std::sqrt(2.0) / 2.0));
}

TEST_CASE("matching equals brute force on random instances") {
    Rng rng(2);
    std::vector<std::vector<double>> targets(50), sources(50);
    for (auto& v : targets) {
        v.resize(4);
        for (double& x : v) x = rng.normal();
    }
    for (auto& v : sources) {
        v.resize(4);
        for (double& x : v) x = rng.normal();
    }
    std::vector<int> queries;
    for (int q = 0; q < 50; ++q) queries.push_back(q);
    const MatchResult res = match_features(targets, sources, queries);
    for (int q = 0; q < 50; ++q)
        CHECK(res.match[static_cast<std::size_t>(q)] ==
              brute_force_match(targets[static_cast<std::size_t>(q)], sources));
}

TEST_CASE("zero-norm targets keep their feature; zero-norm sources never win") {
    std::vector<std::vector<double>> targets = {{0.0, 0.0}, {1.0, 0.0}};
    std::vector<std::vector<double>> sources = {{0.0, 0.0}, {1.0, 1.0}};
    const MatchResult res = match_features(targets, sources, {0, 1});
    CHECK(res.match[0] == -1);  // degenerate target: no replacement
    CHECK(res.match[1] == 1);   // zero-norm source 0 skipped
}

TEST_CASE("alpha 0 is a no-op with an empty plan") {
    Rng rng(3);
    const Tensor3 f_t = random_map(3, 2, 5, rng);
    const Tensor3 f_m = random_map(3, 2, 5, rng);
    const auto [fused, plan] = fuse_bottleneck(f_t, f_m, FusionConfig{0.0, 7});
    CHECK(fused.v == f_t.v);
    CHECK(plan.selected.empty());
}

TEST_CASE("alpha 1 self-fusion is the identity") {
    Rng rng(4);
    const Tensor3 f = random_map(4, 3, 5, rng);
    const auto [fused, plan] = fuse_bottleneck(f, f, FusionConfig{1.0, 5});
    CHECK(plan.selected.size() == 15);
    for (std::size_t i = 0; i < f.v.size(); ++i)
        CHECK(fused.v[i] == doctest::Approx(f.v[i]).epsilon(0.0));
}

TEST_CASE("alpha 1 with a constant source map floods the target") {
    Rng rng(5);
    const Tensor3 f_t = random_map(2, 2, 4, rng);
    Tensor3 f_m(2, 2, 4);
    for (int c = 0; c < 2; ++c)
        for (int t = 0; t < 4; ++t) {
            f_m.at(0, c, t) = 2.0;
            f_m.at(1, c, t) = -1.0;
        }
    const auto [fused, plan] = fuse_bottleneck(f_t, f_m, FusionConfig{1.0, 9});
    for (int c = 0; c < 2; ++c)
        for (int t = 0; t < 4; ++t) {
            CHECK(fused.at(0, c, t) == 2.0);
            CHECK(fused.at(1, c, t) == -1.0);
        }
    CHECK(plan.selected.size() == 8);
}

TEST_CASE("fusion is deterministic; different seeds differ in Q") {
    Rng rng(6);
    const Tensor3 f_t = random_map(8, 22, 30, rng);  // N = 660
    const Tensor3 f_m = random_map(8, 22, 30, rng);
    const auto [fused_a, plan_a] = fuse_bottleneck(f_t, f_m, FusionConfig{0.2, 42});
    const auto [fused_b, plan_b] = fuse_bottleneck(f_t, f_m, FusionConfig{0.2, 42});
    CHECK(fused_a.v == fused_b.v);
    REQUIRE(plan_a.selected.size() == plan_b.selected.size());
    for (std::size_t i = 0; i < plan_a.selected.size(); ++i)
        CHECK(plan_a.selected[i].flat == plan_b.selected[i].flat);

    std::set<std::vector<int>> qs;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto [fused, plan] = fuse_bottleneck(f_t, f_m, FusionConfig{0.2, seed});
        std::vector<int> q;
        for (const auto& s : plan.selected) q.push_back(s.flat);
        qs.insert(q);
    }
    CHECK(qs.size() == 10);
}

TEST_CASE("selected coordinates are distinct and matches complete") {
    Rng rng(7);
    const Tensor3 f_t = random_map(4, 3, 10, rng);
    const Tensor3 f_m = random_map(4, 3, 10, rng);
    const auto [fused, plan] = fuse_bottleneck(f_t, f_m, FusionConfig{0.5, 11});
    std::set<int> flats;
    for (const auto& s : plan.selected) {
        flats.insert(s.flat);
        CHECK(s.replaced);
        CHECK(s.match_flat >= 0);
        CHECK(s.match_flat < 30);
    }
    CHECK(flats.size() == plan.selected.size());
    CHECK(plan.selected.size() == 15);  // round(0.5 * 30)
}

TEST_CASE("propagation projects one bottleneck cell to a scaled window") {
    FusionPlan plan;
    plan.channels = 3;
    plan.t_bottleneck = 20;
    plan.depth = 2;
    FusionSelection sel;
    sel.flat = 1 * 20 + 0;  // channel 1, t'=0
    sel.channel = 1;
    sel.t = 0;
    sel.match_flat = 5;
    sel.replaced = true;
    plan.selected.push_back(sel);
    compute_layer_regions(plan, {200, 40, 20});
    REQUIRE(plan.layer_regions.size() == 2);
    REQUIRE(plan.layer_regions[0].size() == 1);
    CHECK(plan.layer_regions[0][0].channel == 1);
    CHECK(plan.layer_regions[0][0].t_begin == 0);
    CHECK(plan.layer_regions[0][0].t_end == 10);
    CHECK(plan.layer_regions[1][0].t_begin == 0);
    CHECK(plan.layer_regions[1][0].t_end == 2);
}

TEST_CASE("windows across layers nest over the originating cell") {
    FusionPlan plan;
    plan.channels = 2;
    plan.t_bottleneck = 10;
    plan.depth = 1;
    for (int t : {3, 7, 9}) {
        FusionSelection sel;
        sel.flat = t;
        sel.channel = 0;
        sel.t = t;
        sel.match_flat = 0;
        sel.replaced = true;
        plan.selected.push_back(sel);
    }
    const std::vector<int> times = {250, 50, 10};
    compute_layer_regions(plan, times);
    for (std::size_t l = 0; l < 2; ++l) {
        const double scale = static_cast<double>(times[l]) / 10.0;
        for (std::size_t i = 0; i < plan.selected.size(); ++i) {
            const auto& r = plan.layer_regions[l][i];
            const int t = plan.selected[i].t;
            CHECK(r.t_begin <= static_cast<int>(t * scale));
            CHECK(r.t_end >= static_cast<int>((t + 1) * scale));
        }
    }
}

TEST_CASE("propagate: empty plan and self-replacement leave the stack unchanged") {
    Rng rng(8);
    FeatureStack stack;
    stack.layers.push_back(random_map(2, 3, 20, rng));
    stack.layers.push_back(random_map(4, 3, 10, rng));
    stack.layers.push_back(random_map(8, 3, 5, rng));

    FusionPlan empty;
    empty.channels = 3;
    empty.t_bottleneck = 5;
    empty.depth = 8;
    const FeatureStack same = propagate_plan(empty, stack, stack);
    for (std::size_t l = 0; l < 3; ++l) CHECK(same.layers[l].v == stack.layers[l].v);

    const auto [fused, plan] = fuse_bottleneck(stack.layers[2], stack.layers[2],
                                               FusionConfig{1.0, 3});
    const FeatureStack self = propagate_plan(plan, stack, stack);
    for (std::size_t l = 0; l < 3; ++l) CHECK(self.layers[l].v == stack.layers[l].v);
}

TEST_CASE("positions outside plan regions are bit-identical after propagation") {
    Rng rng(9);
    FeatureStack target, source;
    target.layers = {random_map(2, 2, 20, rng), random_map(3, 2, 10, rng),
                     random_map(4, 2, 5, rng)};
    source.layers = {random_map(2, 2, 20, rng), random_map(3, 2, 10, rng),
                     random_map(4, 2, 5, rng)};
    auto [fused, plan] = fuse_bottleneck(target.layers[2], source.layers[2],
                                         FusionConfig{0.3, 21});
    compute_layer_regions(plan, {20, 10, 5});
    const FeatureStack out = propagate_plan(plan, target, source);

    std::set<std::pair<int, int>> replaced_bottom;
    for (const auto& s : plan.selected) replaced_bottom.insert({s.channel, s.t});
    for (int c = 0; c < 2; ++c)
        for (int t = 0; t < 5; ++t)
            if (!replaced_bottom.count({c, t}))
                for (int d = 0; d < 4; ++d)
                    CHECK(out.layers[2].at(d, c, t) == target.layers[2].at(d, c, t));

    for (std::size_t l = 0; l < 2; ++l) {
        const Tensor3& layer = target.layers[l];
        for (int c = 0; c < layer.channels; ++c) {
            for (int t = 0; t < layer.time; ++t) {
                bool inside = false;
                for (const auto& r : plan.layer_regions[l])
                    if (r.channel == c && t >= r.t_begin && t < r.t_end) inside = true;
                if (!inside)
                    for (int d = 0; d < layer.depth; ++d)
                        CHECK(out.layers[l].at(d, c, t) == layer.at(d, c, t));
            }
        }
    }
}

TEST_CASE("plans serialize to JSON") {
    Rng rng(10);
    const Tensor3 f_t = random_map(2, 2, 5, rng);
    const Tensor3 f_m = random_map(2, 2, 5, rng);
    auto [fused, plan] = fuse_bottleneck(f_t, f_m, FusionConfig{0.4, 2});
    compute_layer_regions(plan, {20, 10, 5});
    testutil::TempDir dir;
    write_plan(plan, dir.path / "plan.json");
    const std::string text = testutil::read_file(dir.path / "plan.json");
    CHECK(text.find("\"selected\"") != std::string::npos);
    CHECK(text.find("\"similarity\"") != std::string::npos);
    CHECK(text.find("\"layer_regions\"") != std::string::npos);
}

}  // TEST_SUITE
