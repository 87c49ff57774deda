#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairsage/graph.hpp"
#include "fairsage/rng.hpp"
#include "fairsage/sampling.hpp"
#include "fairsage/tape.hpp"
#include "fairsage/tensor.hpp"

namespace fairsage {

enum class ModelKind { lr, mlp, sage };
enum class Aggregator { mean, maxpool, attention };
enum class FeatureSet { text_user, text_user_network };

ModelKind parse_model_kind(const std::string& s);
Aggregator parse_aggregator(const std::string& s);
FeatureSet parse_feature_set(const std::string& s);
const char* model_kind_name(ModelKind k);
const char* aggregator_name(Aggregator a);
const char* feature_set_name(FeatureSet f);

struct ModelConfig {
    ModelKind kind = ModelKind::sage;
    Aggregator aggregator = Aggregator::mean;  // sage only
    FeatureSet feature_set = FeatureSet::text_user;
    std::size_t feature_dim = 0;
    std::size_t hidden_dim = 128;
    std::size_t layers = 2;  // hidden layers for mlp, hops for sage, 0 for lr
    Direction direction = Direction::both;
    std::vector<std::size_t> fanouts = {25, 10};
    double dropout_rate = 0.5;
};

void validate(const ModelConfig& cfg);

using ModelParams = ParamSet;

struct ParamSpec {
    std::string name;
    std::size_t rows, cols;
    bool zero_init;  // biases start at zero, weights at glorot uniform
};

// Defines the parameter set: names, shapes, and their fixed order (the
// initialization, binding, and checkpoint order).
std::vector<ParamSpec> param_specs(const ModelConfig& cfg);

// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
ModelParams init_params(const ModelConfig& cfg, RngStream& rng);

// Registers every parameter as a tape input, in ParamSet order.
std::vector<NodeId> bind_params(Tape& t, const ModelParams& params);

// Forward builders. `pids` must come from bind_params (or equivalent inputs
// in ParamSet order). Dropout draws from `rng` only when active and the rate
// is nonzero.
NodeId lr_logits(Tape& t, const ModelParams& params, const std::vector<NodeId>& pids,
                 NodeId features);
NodeId mlp_logits(Tape& t, const ModelConfig& cfg, const ModelParams& params,
                  const std::vector<NodeId>& pids, NodeId features, bool dropout_active,
                  RngStream* rng);
// `features` rows align with block.layer_nodes.back(). Returns logits for
// the seed rows, in seed order.
NodeId sage_logits(Tape& t, const ModelConfig& cfg, const ModelParams& params,
                   const std::vector<NodeId>& pids, const SampledBlock& block, NodeId features,
                   bool dropout_active, RngStream* rng);

// Builds the appropriate forward for the config; for sage the block must
// already be sampled and features gathered.
NodeId model_logits(Tape& t, const ModelConfig& cfg, const ModelParams& params,
                    const std::vector<NodeId>& pids, NodeId features, const SampledBlock* block,
                    bool dropout_active, RngStream* rng);

// Inference: sigmoid probabilities, dropout off.
std::vector<double> feature_model_scores(const ModelConfig& cfg, const ModelParams& params,
                                         const Tensor& feature_rows);
std::vector<double> sage_scores(const ModelConfig& cfg, const ModelParams& params,
                                const DirectedGraph& g, const Tensor& all_features,
                                const std::vector<std::uint32_t>& seeds, RngStream& rng);

}  // namespace fairsage
