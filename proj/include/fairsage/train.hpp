#pragma once

#include <cstdint>
#include <vector>

#include "fairsage/graph.hpp"
#include "fairsage/model.hpp"
#include "fairsage/node_table.hpp"
#include "fairsage/rng.hpp"
#include "fairsage/tape.hpp"

namespace fairsage {

// Ratio of negatives to positives; rejects single-class and unlabeled input.
double class_weight(const std::vector<std::int8_t>& labels);

// Mean over the batch of -[w*y*log(sigmoid(z)) + (1-y)*log(1-sigmoid(z))] in
// the log-sum-exp form. Standalone twin of the tape op.
double weighted_bce_loss(const std::vector<double>& logits, const std::vector<double>& labels,
                         double pos_weight);

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::size_t step = 0;
    std::vector<Tensor> m, v;  // aligned with the ParamSet order

    explicit AdamState(const ParamSet& params);
};

// Bias-corrected moment update, in place. `pids` maps each parameter to its
// tape input node; parameters the loss never touched see a zero gradient.
void adam_step(ParamSet& params, const Gradients& grads, const std::vector<NodeId>& pids,
               AdamState& state, const AdamHyper& hyper);

struct FoldPlan {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<std::uint32_t>> train_nodes;
    std::vector<std::vector<std::uint32_t>> test_nodes;
};

// Label-stratified partition: every node tests exactly once and each fold's
// class counts differ from an even split by at most one node.
FoldPlan stratified_kfold(const std::vector<std::uint32_t>& nodes,
                          const std::vector<std::int8_t>& labels, std::size_t k,
                          std::uint64_t seed);

struct TrainHyper {
    AdamHyper adam;
    std::size_t epochs = 30;
    std::size_t batch = 512;
};

struct TrainRun {
    std::size_t fold = 0;
    double pos_weight = 0.0;
    std::vector<double> epoch_loss;  // training-set mean loss per epoch
    ModelParams params;
    Standardization standardization;  // fit on this fold's training rows only
};

struct FoldPredictions {
    std::vector<std::uint32_t> nodes;  // the fold's test nodes
    std::vector<std::int8_t> labels;
    std::vector<double> scores;
};

struct TrainResult {
    std::vector<TrainRun> runs;
    std::vector<FoldPredictions> predictions;
};

// Trains one model per fold. `features` is the assembled raw matrix for all
// graph nodes; each fold standardizes it with statistics from its own
// training rows, so test labels and test feature statistics never reach the
// optimizer. `labels` is graph-aligned. The rng only seeds per-fold child
// streams, so folds are independent of each other's draws.
TrainResult train(const ModelConfig& cfg, const TrainHyper& hyper, const DirectedGraph& g,
                  const Tensor& features, const std::vector<std::int8_t>& labels,
                  const FoldPlan& plan, RngStream& rng);

}  // namespace fairsage
