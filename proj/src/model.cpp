#include "fairsage/model.hpp"

#include <cmath>
#include <memory>

#include "fairsage/errors.hpp"

namespace fairsage {

ModelKind parse_model_kind(const std::string& s) {
    if (s == "lr") return ModelKind::lr;
    if (s == "mlp") return ModelKind::mlp;
    if (s == "sage") return ModelKind::sage;
    throw UsageError("unknown model '" + s + "' (expected lr, mlp, or sage)");
}

Aggregator parse_aggregator(const std::string& s) {
    if (s == "mean") return Aggregator::mean;
    if (s == "maxpool") return Aggregator::maxpool;
    if (s == "attention") return Aggregator::attention;
    throw UsageError("unknown aggregator '" + s + "' (expected mean, maxpool, or attention)");
}

FeatureSet parse_feature_set(const std::string& s) {
    if (s == "text_user" || s == "text+user") return FeatureSet::text_user;
    if (s == "text_user_network" || s == "text+user+network")
        return FeatureSet::text_user_network;
    throw UsageError("unknown feature set '" + s +
                     "' (expected text_user or text_user_network)");
}

const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::lr: return "lr";
        case ModelKind::mlp: return "mlp";
        default: return "sage";
    }
}

const char* aggregator_name(Aggregator a) {
    switch (a) {
        case Aggregator::mean: return "mean";
        case Aggregator::maxpool: return "maxpool";
        default: return "attention";
    }
}

const char* feature_set_name(FeatureSet f) {
    return f == FeatureSet::text_user ? "text_user" : "text_user_network";
}

void validate(const ModelConfig& cfg) {
    if (cfg.feature_dim == 0) throw UsageError("feature dimension must be positive");
    if (!std::isfinite(cfg.dropout_rate) || cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0)
        throw UsageError("dropout rate must lie in [0, 1)");
    switch (cfg.kind) {
        case ModelKind::lr:
            if (cfg.layers != 0) throw UsageError("lr takes no hidden layers");
            break;
        case ModelKind::mlp:
            if (cfg.layers == 0) throw UsageError("mlp needs at least one hidden layer");
            if (cfg.hidden_dim == 0) throw UsageError("hidden dimension must be positive");
            break;
        case ModelKind::sage:
            if (cfg.layers == 0) throw UsageError("sage needs at least one layer");
            if (cfg.hidden_dim == 0) throw UsageError("hidden dimension must be positive");
            if (cfg.fanouts.size() != cfg.layers)
                throw UsageError("fanout list length must equal the layer count");
            for (std::size_t f : cfg.fanouts)
                if (f == 0) throw UsageError("fanouts must be positive");
            break;
    }
}

std::vector<ParamSpec> param_specs(const ModelConfig& cfg) {
    validate(cfg);
    std::vector<ParamSpec> specs;
    if (cfg.kind == ModelKind::lr) {
        specs.push_back({"w", cfg.feature_dim, 1, false});
        specs.push_back({"b", 1, 1, true});
        return specs;
    }
    std::size_t in = cfg.feature_dim;
    const std::size_t h = cfg.hidden_dim;
    for (std::size_t l = 1; l <= cfg.layers; ++l) {
        const std::string prefix = "layer" + std::to_string(l);
        if (cfg.kind == ModelKind::mlp) {
            specs.push_back({prefix + ".w", in, h, false});
            specs.push_back({prefix + ".b", 1, h, true});
        } else {
            const std::size_t agg_dim = cfg.aggregator == Aggregator::mean ? in : h;
            specs.push_back({prefix + ".w", in + agg_dim, h, false});
            specs.push_back({prefix + ".b", 1, h, true});
            if (cfg.aggregator == Aggregator::maxpool) {
                specs.push_back({prefix + ".pool.w", in, h, false});
                specs.push_back({prefix + ".pool.b", 1, h, true});
            } else if (cfg.aggregator == Aggregator::attention) {
                specs.push_back({prefix + ".att.w", in, h, false});
                specs.push_back({prefix + ".att.a", 2 * h, 1, false});
            }
        }
        in = h;
    }
    specs.push_back({"head.w", in, 1, false});
    specs.push_back({"head.b", 1, 1, true});
    return specs;
}

ModelParams init_params(const ModelConfig& cfg, RngStream& rng) {
    ModelParams params;
    for (const auto& spec : param_specs(cfg)) {
        Tensor t(spec.rows, spec.cols);
        if (!spec.zero_init) {
            const double limit = std::sqrt(6.0 / static_cast<double>(spec.rows + spec.cols));
            for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-limit, limit);
        }
        params.add(spec.name, std::move(t));
    }
    return params;
}

std::vector<NodeId> bind_params(Tape& t, const ModelParams& params) {
    std::vector<NodeId> ids;
    ids.reserve(params.size());
    for (const auto& entry : params) ids.push_back(t.input(entry.second));
    return ids;
}

namespace {

NodeId dropout(Tape& t, NodeId x, double rate, bool active, RngStream* rng) {
    if (!active || rate <= 0.0) return x;
    if (rng == nullptr) throw UsageError("dropout requires an rng while training");
    const Tensor& v = t.value(x);
    Tensor mask(v.rows(), v.cols());
    const double keep = 1.0 - rate;
    for (std::size_t i = 0; i < mask.size(); ++i)
        mask[i] = rng->uniform() < rate ? 0.0 : 1.0 / keep;
    return t.elementwise_mul(x, t.input(std::move(mask)));
}

std::shared_ptr<const IndexVec> iota_rows(std::size_t n) {
    auto v = std::make_shared<IndexVec>(n);
    for (std::size_t i = 0; i < n; ++i) (*v)[i] = static_cast<std::uint32_t>(i);
    return v;
}

NodeId pid_of(const ModelParams& params, const std::vector<NodeId>& pids,
              const std::string& name) {
    const std::size_t idx = params.index_of(name);
    if (idx >= pids.size()) throw NumericError("parameter ids do not cover " + name);
    return pids[idx];
}

}  // namespace

NodeId lr_logits(Tape& t, const ModelParams& params, const std::vector<NodeId>& pids,
                 NodeId features) {
    return t.add(t.matmul(features, pid_of(params, pids, "w")), pid_of(params, pids, "b"));
}

NodeId mlp_logits(Tape& t, const ModelConfig& cfg, const ModelParams& params,
                  const std::vector<NodeId>& pids, NodeId features, bool dropout_active,
                  RngStream* rng) {
    NodeId h = dropout(t, features, cfg.dropout_rate, dropout_active, rng);
    for (std::size_t l = 1; l <= cfg.layers; ++l) {
        const std::string prefix = "layer" + std::to_string(l);
        h = t.relu(t.add(t.matmul(h, pid_of(params, pids, prefix + ".w")),
                         pid_of(params, pids, prefix + ".b")));
        h = dropout(t, h, cfg.dropout_rate, dropout_active, rng);
    }
    return t.add(t.matmul(h, pid_of(params, pids, "head.w")), pid_of(params, pids, "head.b"));
}

NodeId sage_logits(Tape& t, const ModelConfig& cfg, const ModelParams& params,
                   const std::vector<NodeId>& pids, const SampledBlock& block, NodeId features,
                   bool dropout_active, RngStream* rng) {
    const std::size_t hops = block.layers();
    if (hops != cfg.layers)
        throw UsageError("sampled block has " + std::to_string(hops) + " hops but the model has " +
                         std::to_string(cfg.layers) + " layers");
    const Tensor& base = t.value(features);
    if (base.rows() != block.layer_nodes.back().size())
        throw NumericError("feature rows " + std::to_string(base.rows()) +
                           " do not match block nodes " +
                           std::to_string(block.layer_nodes.back().size()));
    if (base.cols() != cfg.feature_dim)
        throw NumericError("feature width " + std::to_string(base.cols()) +
                           " does not match the model input " + std::to_string(cfg.feature_dim));

    NodeId h = dropout(t, features, cfg.dropout_rate, dropout_active, rng);
    for (std::size_t hop = hops; hop-- > 0;) {
        const std::size_t l = cfg.layers - hop;
        const std::string prefix = "layer" + std::to_string(l);
        const std::size_t m = block.layer_nodes[hop].size();
        // layer_nodes[hop] is a prefix of layer_nodes[hop + 1], so the self
        // embedding of node i is row i of the current matrix.
        NodeId h_self = t.gather_rows(h, iota_rows(m));

        NodeId agg;
        if (cfg.aggregator == Aggregator::mean) {
            NodeId nv = t.gather_rows(h, block.neighbor_rows[hop]);
            agg = t.segment_mean(nv, block.seg_offsets[hop]);
        } else if (cfg.aggregator == Aggregator::maxpool) {
            NodeId pooled = t.relu(t.add(t.matmul(h, pid_of(params, pids, prefix + ".pool.w")),
                                         pid_of(params, pids, prefix + ".pool.b")));
            NodeId nv = t.gather_rows(pooled, block.neighbor_rows[hop]);
            agg = t.segment_max(nv, block.seg_offsets[hop]);
        } else {
            NodeId proj = t.matmul(h, pid_of(params, pids, prefix + ".att.w"));
            const IndexVec& off = *block.seg_offsets[hop];
            auto owner = std::make_shared<IndexVec>();
            owner->reserve(block.neighbor_rows[hop]->size());
            for (std::size_t i = 0; i + 1 < off.size(); ++i)
                for (std::uint32_t r = off[i]; r < off[i + 1]; ++r)
                    owner->push_back(static_cast<std::uint32_t>(i));
            NodeId self_part = t.gather_rows(proj, owner);
            NodeId neigh_part = t.gather_rows(proj, block.neighbor_rows[hop]);
            NodeId pair = t.concat_cols(self_part, neigh_part);
            NodeId scores = t.leaky_relu(t.matmul(pair, pid_of(params, pids, prefix + ".att.a")));
            agg = t.segment_softmax_weighted_sum(scores, neigh_part, block.seg_offsets[hop]);
        }

        NodeId comb = t.concat_cols(h_self, agg);
        h = t.relu(t.add(t.matmul(comb, pid_of(params, pids, prefix + ".w")),
                         pid_of(params, pids, prefix + ".b")));
        if (hop > 0) {
            h = t.l2_normalize_rows(h);
            h = dropout(t, h, cfg.dropout_rate, dropout_active, rng);
        }
    }
    return t.add(t.matmul(h, pid_of(params, pids, "head.w")), pid_of(params, pids, "head.b"));
}

NodeId model_logits(Tape& t, const ModelConfig& cfg, const ModelParams& params,
                    const std::vector<NodeId>& pids, NodeId features, const SampledBlock* block,
                    bool dropout_active, RngStream* rng) {
    switch (cfg.kind) {
        case ModelKind::lr: return lr_logits(t, params, pids, features);
        case ModelKind::mlp:
            return mlp_logits(t, cfg, params, pids, features, dropout_active, rng);
        default:
            if (block == nullptr) throw UsageError("sage forward needs a sampled block");
            return sage_logits(t, cfg, params, pids, *block, features, dropout_active, rng);
    }
}

namespace {

std::vector<double> sigmoid_column(Tape& t, NodeId logits) {
    const Tensor& probs = t.value(t.sigmoid(logits));
    std::vector<double> out(probs.rows());
    for (std::size_t i = 0; i < probs.rows(); ++i) out[i] = probs.at(i, 0);
    return out;
}

}  // namespace

std::vector<double> feature_model_scores(const ModelConfig& cfg, const ModelParams& params,
                                         const Tensor& feature_rows) {
    if (cfg.kind == ModelKind::sage) throw UsageError("sage scoring needs the graph");
    Tape t;
    std::vector<NodeId> pids = bind_params(t, params);
    NodeId x = t.input(feature_rows);
    NodeId logits = model_logits(t, cfg, params, pids, x, nullptr, false, nullptr);
    return sigmoid_column(t, logits);
}

std::vector<double> sage_scores(const ModelConfig& cfg, const ModelParams& params,
                                const DirectedGraph& g, const Tensor& all_features,
                                const std::vector<std::uint32_t>& seeds, RngStream& rng) {
    if (cfg.kind != ModelKind::sage) throw UsageError("graph scoring is a sage path");
    SampledBlock block = sample_neighbors(g, seeds, cfg.fanouts, cfg.direction, rng);
    Tape t;
    std::vector<NodeId> pids = bind_params(t, params);
    NodeId x = t.input(select_rows(all_features, block.layer_nodes.back()));
    NodeId logits = sage_logits(t, cfg, params, pids, block, x, false, nullptr);
    return sigmoid_column(t, logits);
}

}  // namespace fairsage
