#include "fairsage/gradcheck.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "fairsage/errors.hpp"
#include "fairsage/graph.hpp"
#include "fairsage/rng.hpp"
#include "fairsage/sampling.hpp"
#include "fairsage/tape.hpp"
#include "fairsage/tensor.hpp"

namespace fairsage {

namespace {

DirectedGraph random_graph(std::size_t n, double edge_prob, RngStream& rng) {
    DirectedGraph g;
    g.node_count = n;
    g.edges.offsets.assign(1, 0);
    for (std::uint32_t u = 0; u < n; ++u) {
        for (std::uint32_t v = 0; v < n; ++v)
            if (v != u && rng.uniform() < edge_prob) g.edges.targets.push_back(v);
        g.edges.offsets.push_back(g.edges.targets.size());
    }
    g.reverse_edges = transpose(g.edges);
    g.external_ids.resize(n);
    std::iota(g.external_ids.begin(), g.external_ids.end(), 0);
    for (std::uint32_t i = 0; i < n; ++i) g.id_of[i] = i;
    return g;
}

Tensor random_features(std::size_t rows, std::size_t cols, RngStream& rng) {
    Tensor t(rows, cols);
    for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
    return t;
}

}  // namespace

double model_grad_max_rel_error(const ModelConfig& base, std::uint64_t seed,
                                std::size_t points) {
    if (points == 0) throw UsageError("gradient check needs at least one point");
    ModelConfig cfg = base;
    cfg.dropout_rate = 0.0;
    validate(cfg);

    const std::size_t n = 10;
    double worst = 0.0;
    for (std::size_t point = 0; point < points; ++point) {
        RngStream rng(seed, point);
        auto graph_rng = rng.child(0);
        auto feat_rng = rng.child(1);
        auto param_rng = rng.child(2);
        auto pick_rng = rng.child(3);

        DirectedGraph g = random_graph(n, 0.3, graph_rng);
        Tensor feats = random_features(n, cfg.feature_dim, feat_rng);
        ModelParams params = init_params(cfg, param_rng);
        // Zero-initialized biases put a layer exactly on the relu kink
        // whenever an input row dies; jitter every entry so the comparison
        // happens at a point of differentiability.
        for (std::size_t i = 0; i < params.size(); ++i)
            for (double& v : params[i].second.values()) v += param_rng.uniform(-0.05, 0.05);

        std::vector<std::uint32_t> pool(n);
        std::iota(pool.begin(), pool.end(), 0);
        sample_prefix(pool, 3, pick_rng);
        std::vector<std::uint32_t> seeds(pool.begin(), pool.begin() + 3);
        std::vector<double> labels(seeds.size());
        for (double& y : labels) y = pick_rng.uniform() < 0.5 ? 1.0 : 0.0;
        const double pos_weight = 1.0 + 4.0 * pick_rng.uniform();

        SampledBlock block;
        Tensor x;
        if (cfg.kind == ModelKind::sage) {
            auto block_rng = rng.child(4);
            block = sample_neighbors(g, seeds, cfg.fanouts, cfg.direction, block_rng);
            x = select_rows(feats, block.layer_nodes.back());
        } else {
            x = select_rows(feats, seeds);
        }

        auto build = [&](Tape& t, const std::vector<NodeId>& pids) {
            NodeId input = t.input(x);
            NodeId logits =
                model_logits(t, cfg, params, pids, input,
                             cfg.kind == ModelKind::sage ? &block : nullptr, false, nullptr);
            return t.weighted_bce_logits(logits, labels, pos_weight);
        };
        worst = std::max(worst, grad_check(build, params, 1e-5));
    }
    return worst;
}

}  // namespace fairsage
