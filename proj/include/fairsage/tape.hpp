#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "fairsage/tensor.hpp"

namespace fairsage {

using NodeId = std::uint32_t;

enum class OpKind : std::uint8_t {
    input,
    matmul,
    add,
    concat_cols,
    relu,
    leaky_relu,
    sigmoid,
    elementwise_mul,
    l2_normalize_rows,
    gather_rows,
    segment_mean,
    segment_max,
    segment_softmax_weighted_sum,
    sum_all,
    weighted_bce_logits,
};

const char* op_name(OpKind kind);

using IndexVec = std::vector<std::uint32_t>;

// One record on the tape. Values are computed eagerly on append; aux buffers
// cache whatever backward needs (max winners, softmax weights, loss labels).
struct TapeNode {
    OpKind kind;
    std::vector<NodeId> inputs;
    Tensor value;
    double scalar_arg = 0.0;  // leaky_relu slope, bce pos_weight
    std::shared_ptr<const IndexVec> offsets;   // segment ops
    std::shared_ptr<const IndexVec> indices;   // gather_rows
    std::shared_ptr<IndexVec> argmax;          // segment_max winners
    std::shared_ptr<std::vector<double>> aux;  // softmax weights / bce labels
};

// Gradient buffers keyed by node id; nodes unreachable from the loss hold an
// empty tensor.
class Gradients {
public:
    explicit Gradients(std::size_t n) : by_node_(n) {}
    bool has(NodeId id) const { return by_node_[id].size() > 0; }
    Tensor& operator[](NodeId id) { return by_node_[id]; }
    const Tensor& operator[](NodeId id) const { return by_node_[id]; }
    std::size_t size() const { return by_node_.size(); }

private:
    std::vector<Tensor> by_node_;
};

// Reverse-mode differentiation record. Single-owner: one tape per forward
// pass, never shared across threads. Node ids are topologically ordered by
// construction (inputs always precede consumers).
class Tape {
public:
    NodeId input(Tensor value);

    NodeId matmul(NodeId a, NodeId b);
    // Elementwise when shapes match; row-broadcast when b is [1 x d].
    NodeId add(NodeId a, NodeId b);
    NodeId concat_cols(NodeId a, NodeId b);
    NodeId relu(NodeId a);
    NodeId leaky_relu(NodeId a, double alpha = 0.2);
    NodeId sigmoid(NodeId a);
    NodeId elementwise_mul(NodeId a, NodeId b);
    NodeId l2_normalize_rows(NodeId a);
    NodeId gather_rows(NodeId a, std::shared_ptr<const IndexVec> indices);

    // Segment ops: offsets has segments+1 monotone entries partitioning the
    // input row range. Empty segments produce zero rows and zero gradients.
    NodeId segment_mean(NodeId a, std::shared_ptr<const IndexVec> offsets);
    NodeId segment_max(NodeId a, std::shared_ptr<const IndexVec> offsets);
    NodeId segment_softmax_weighted_sum(NodeId scores, NodeId values,
                                        std::shared_ptr<const IndexVec> offsets);

    NodeId sum_all(NodeId a);
    // Mean over the batch of -[w*y*log(sigmoid(z)) + (1-y)*log(1-sigmoid(z))]
    // in log-sum-exp form; labels must be 0/1 and match the logit count.
    NodeId weighted_bce_logits(NodeId logits, std::vector<double> labels, double pos_weight);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    const TapeNode& node(NodeId id) const { return nodes_[id]; }
    std::size_t node_count() const { return nodes_.size(); }

    // Populates a gradient for every node reachable from the loss; the loss
    // gradient w.r.t. itself is 1. Throws NumericError for non-scalar loss.
    Gradients backward(NodeId loss) const;

private:
    NodeId push(TapeNode node, const char* what);
    std::vector<TapeNode> nodes_;
};

// Numerically stable per-element pieces of the class-weighted logistic loss,
// shared by the tape op and the standalone scalar function.
double bce_term(double logit, double label, double pos_weight);
double bce_term_dlogit(double logit, double label, double pos_weight);

// Central-difference audit of backward. `build` must be a pure function of
// the parameter node values: it reconstructs the scalar loss tape each call
// from inputs registered in ParamSet order. Returns the max relative error
// over every parameter entry, with denominator max(|a|, |b|, 1e-8).
// Differences inside the finite-difference rounding noise (a few hundred
// ulps of the loss over 2*eps) count as agreement.
using TapeBuilder = std::function<NodeId(Tape&, const std::vector<NodeId>&)>;
double grad_check(const TapeBuilder& build, const ParamSet& params, double eps);

}  // namespace fairsage
