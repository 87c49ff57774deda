#include "fairsage/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "fairsage/errors.hpp"
#include "fairsage/kernels.hpp"

namespace fairsage {

const char* op_name(OpKind kind) {
    switch (kind) {
        case OpKind::input: return "input";
        case OpKind::matmul: return "matmul";
        case OpKind::add: return "add";
        case OpKind::concat_cols: return "concat_cols";
        case OpKind::relu: return "relu";
        case OpKind::leaky_relu: return "leaky_relu";
        case OpKind::sigmoid: return "sigmoid";
        case OpKind::elementwise_mul: return "elementwise_mul";
        case OpKind::l2_normalize_rows: return "l2_normalize_rows";
        case OpKind::gather_rows: return "gather_rows";
        case OpKind::segment_mean: return "segment_mean";
        case OpKind::segment_max: return "segment_max";
        case OpKind::segment_softmax_weighted_sum: return "segment_softmax_weighted_sum";
        case OpKind::sum_all: return "sum_all";
        case OpKind::weighted_bce_logits: return "weighted_bce_logits";
    }
    return "unknown";
}

namespace {

[[noreturn]] void shape_error(OpKind kind, const Tensor& a, const Tensor& b) {
    throw NumericError(std::string("shape mismatch in ") + op_name(kind) + ": " +
                       a.shape_str() + " vs " + b.shape_str());
}

void check_offsets(OpKind kind, const IndexVec& offsets, std::size_t rows) {
    if (offsets.empty() || offsets.front() != 0)
        throw NumericError(std::string(op_name(kind)) + ": offsets must start at 0");
    for (std::size_t i = 1; i < offsets.size(); ++i)
        if (offsets[i] < offsets[i - 1])
            throw NumericError(std::string(op_name(kind)) + ": offsets must be non-decreasing");
    if (offsets.back() != rows)
        throw NumericError(std::string(op_name(kind)) + ": offsets end " +
                           std::to_string(offsets.back()) + " does not cover " +
                           std::to_string(rows) + " rows");
}

double softplus(double t) {
    return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

double sigmoid_scalar(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

double bce_term(double logit, double label, double pos_weight) {
    return pos_weight * label * softplus(-logit) + (1.0 - label) * softplus(logit);
}

double bce_term_dlogit(double logit, double label, double pos_weight) {
    double s = sigmoid_scalar(logit);
    return pos_weight * label * (s - 1.0) + (1.0 - label) * s;
}

NodeId Tape::push(TapeNode node, const char* what) {
    if (!node.value.all_finite())
        throw NumericError(std::string("non-finite value produced by ") + what);
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::input(Tensor value) {
    TapeNode n;
    n.kind = OpKind::input;
    n.value = std::move(value);
    return push(std::move(n), "input");
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    if (ta.cols() != tb.rows()) shape_error(OpKind::matmul, ta, tb);
    Tensor out(ta.rows(), tb.cols());
    kernels::matmul(ta.data(), tb.data(), out.data(), ta.rows(), ta.cols(), tb.cols());
    TapeNode n;
    n.kind = OpKind::matmul;
    n.inputs = {a, b};
    n.value = std::move(out);
    return push(std::move(n), "matmul");
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    bool broadcast = tb.rows() == 1 && ta.cols() == tb.cols() && ta.rows() != 1;
    if (!broadcast && !ta.same_shape(tb)) shape_error(OpKind::add, ta, tb);
    Tensor out(ta.rows(), ta.cols());
    for (std::size_t r = 0; r < ta.rows(); ++r) {
        const double* bp = broadcast ? tb.data() : tb.data() + r * tb.cols();
        const double* ap = ta.data() + r * ta.cols();
        double* op = out.data() + r * ta.cols();
        for (std::size_t c = 0; c < ta.cols(); ++c) op[c] = ap[c] + bp[c];
    }
    TapeNode n;
    n.kind = OpKind::add;
    n.inputs = {a, b};
    n.value = std::move(out);
    return push(std::move(n), "add");
}

NodeId Tape::concat_cols(NodeId a, NodeId b) {
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    if (ta.rows() != tb.rows()) shape_error(OpKind::concat_cols, ta, tb);
    Tensor out(ta.rows(), ta.cols() + tb.cols());
    for (std::size_t r = 0; r < ta.rows(); ++r) {
        double* op = out.data() + r * out.cols();
        std::copy_n(ta.data() + r * ta.cols(), ta.cols(), op);
        std::copy_n(tb.data() + r * tb.cols(), tb.cols(), op + ta.cols());
    }
    TapeNode n;
    n.kind = OpKind::concat_cols;
    n.inputs = {a, b};
    n.value = std::move(out);
    return push(std::move(n), "concat_cols");
}

NodeId Tape::relu(NodeId a) {
    const Tensor& ta = nodes_[a].value;
    Tensor out(ta.rows(), ta.cols());
    for (std::size_t i = 0; i < ta.size(); ++i) out[i] = ta[i] > 0.0 ? ta[i] : 0.0;
    TapeNode n;
    n.kind = OpKind::relu;
    n.inputs = {a};
    n.value = std::move(out);
    return push(std::move(n), "relu");
}

NodeId Tape::leaky_relu(NodeId a, double alpha) {
    const Tensor& ta = nodes_[a].value;
    Tensor out(ta.rows(), ta.cols());
    for (std::size_t i = 0; i < ta.size(); ++i) out[i] = ta[i] > 0.0 ? ta[i] : alpha * ta[i];
    TapeNode n;
    n.kind = OpKind::leaky_relu;
    n.inputs = {a};
    n.value = std::move(out);
    n.scalar_arg = alpha;
    return push(std::move(n), "leaky_relu");
}

NodeId Tape::sigmoid(NodeId a) {
    const Tensor& ta = nodes_[a].value;
    Tensor out(ta.rows(), ta.cols());
    for (std::size_t i = 0; i < ta.size(); ++i) out[i] = sigmoid_scalar(ta[i]);
    TapeNode n;
    n.kind = OpKind::sigmoid;
    n.inputs = {a};
    n.value = std::move(out);
    return push(std::move(n), "sigmoid");
}

NodeId Tape::elementwise_mul(NodeId a, NodeId b) {
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    if (!ta.same_shape(tb)) shape_error(OpKind::elementwise_mul, ta, tb);
    Tensor out(ta.rows(), ta.cols());
    for (std::size_t i = 0; i < ta.size(); ++i) out[i] = ta[i] * tb[i];
    TapeNode n;
    n.kind = OpKind::elementwise_mul;
    n.inputs = {a, b};
    n.value = std::move(out);
    return push(std::move(n), "elementwise_mul");
}

NodeId Tape::l2_normalize_rows(NodeId a) {
    const Tensor& ta = nodes_[a].value;
    Tensor out(ta.rows(), ta.cols());
    for (std::size_t r = 0; r < ta.rows(); ++r) {
        const double* ap = ta.data() + r * ta.cols();
        double* op = out.data() + r * ta.cols();
        double sq = 0.0;
        for (std::size_t c = 0; c < ta.cols(); ++c) sq += ap[c] * ap[c];
        double norm = std::sqrt(sq);
        if (norm == 0.0) {
            std::fill_n(op, ta.cols(), 0.0);
        } else {
            for (std::size_t c = 0; c < ta.cols(); ++c) op[c] = ap[c] / norm;
        }
    }
    TapeNode n;
    n.kind = OpKind::l2_normalize_rows;
    n.inputs = {a};
    n.value = std::move(out);
    return push(std::move(n), "l2_normalize_rows");
}

NodeId Tape::gather_rows(NodeId a, std::shared_ptr<const IndexVec> indices) {
    const Tensor& ta = nodes_[a].value;
    Tensor out(indices->size(), ta.cols());
    for (std::size_t r = 0; r < indices->size(); ++r) {
        std::uint32_t src = (*indices)[r];
        if (src >= ta.rows())
            throw NumericError("gather_rows: index " + std::to_string(src) +
                               " out of range for " + ta.shape_str());
        std::copy_n(ta.data() + std::size_t{src} * ta.cols(), ta.cols(),
                    out.data() + r * ta.cols());
    }
    TapeNode n;
    n.kind = OpKind::gather_rows;
    n.inputs = {a};
    n.value = std::move(out);
    n.indices = std::move(indices);
    return push(std::move(n), "gather_rows");
}

NodeId Tape::segment_mean(NodeId a, std::shared_ptr<const IndexVec> offsets) {
    const Tensor& ta = nodes_[a].value;
    check_offsets(OpKind::segment_mean, *offsets, ta.rows());
    std::size_t segments = offsets->size() - 1;
    Tensor out(segments, ta.cols());
    kernels::segment_mean(ta.data(), offsets->data(), segments, ta.cols(), out.data());
    TapeNode n;
    n.kind = OpKind::segment_mean;
    n.inputs = {a};
    n.value = std::move(out);
    n.offsets = std::move(offsets);
    return push(std::move(n), "segment_mean");
}

NodeId Tape::segment_max(NodeId a, std::shared_ptr<const IndexVec> offsets) {
    const Tensor& ta = nodes_[a].value;
    check_offsets(OpKind::segment_max, *offsets, ta.rows());
    std::size_t segments = offsets->size() - 1;
    Tensor out(segments, ta.cols());
    auto argmax = std::make_shared<IndexVec>(segments * ta.cols());
    kernels::segment_max(ta.data(), offsets->data(), segments, ta.cols(), out.data(),
                         argmax->data());
    TapeNode n;
    n.kind = OpKind::segment_max;
    n.inputs = {a};
    n.value = std::move(out);
    n.offsets = std::move(offsets);
    n.argmax = std::move(argmax);
    return push(std::move(n), "segment_max");
}

NodeId Tape::segment_softmax_weighted_sum(NodeId scores, NodeId values,
                                          std::shared_ptr<const IndexVec> offsets) {
    const Tensor& ts = nodes_[scores].value;
    const Tensor& tv = nodes_[values].value;
    if (ts.cols() != 1 || ts.rows() != tv.rows())
        shape_error(OpKind::segment_softmax_weighted_sum, ts, tv);
    check_offsets(OpKind::segment_softmax_weighted_sum, *offsets, tv.rows());
    std::size_t segments = offsets->size() - 1;
    Tensor out(segments, tv.cols());
    auto weights = std::make_shared<std::vector<double>>(tv.rows());
    kernels::segment_softmax_weighted_sum(ts.data(), tv.data(), offsets->data(), segments,
                                          tv.cols(), weights->data(), out.data());
    TapeNode n;
    n.kind = OpKind::segment_softmax_weighted_sum;
    n.inputs = {scores, values};
    n.value = std::move(out);
    n.offsets = std::move(offsets);
    n.aux = std::move(weights);
    return push(std::move(n), "segment_softmax_weighted_sum");
}

NodeId Tape::sum_all(NodeId a) {
    const Tensor& ta = nodes_[a].value;
    double total = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) total += ta[i];
    TapeNode n;
    n.kind = OpKind::sum_all;
    n.inputs = {a};
    n.value = Tensor::scalar(total);
    return push(std::move(n), "sum_all");
}

NodeId Tape::weighted_bce_logits(NodeId logits, std::vector<double> labels, double pos_weight) {
    const Tensor& tz = nodes_[logits].value;
    if (tz.cols() != 1 || tz.rows() != labels.size())
        throw NumericError("weighted_bce_logits: logits " + tz.shape_str() + " vs " +
                           std::to_string(labels.size()) + " labels");
    if (labels.empty()) throw NumericError("weighted_bce_logits: empty batch");
    for (double y : labels)
        if (y != 0.0 && y != 1.0)
            throw NumericError("weighted_bce_logits: labels must be 0 or 1");
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) total += bce_term(tz[i], labels[i], pos_weight);
    TapeNode n;
    n.kind = OpKind::weighted_bce_logits;
    n.inputs = {logits};
    n.value = Tensor::scalar(total / static_cast<double>(labels.size()));
    n.scalar_arg = pos_weight;
    n.aux = std::make_shared<std::vector<double>>(std::move(labels));
    return push(std::move(n), "weighted_bce_logits");
}

Gradients Tape::backward(NodeId loss) const {
    const Tensor& lv = nodes_[loss].value;
    if (lv.size() != 1)
        throw NumericError("backward requires a scalar loss, got " + lv.shape_str());
    Gradients grads(nodes_.size());
    grads[loss] = Tensor::scalar(1.0);

    auto accumulate = [&](NodeId id, std::size_t r, std::size_t c, double v) {
        Tensor& g = grads[id];
        if (g.size() == 0) g = Tensor(nodes_[id].value.rows(), nodes_[id].value.cols());
        g.at(r, c) += v;
    };
    auto ensure = [&](NodeId id) -> Tensor& {
        Tensor& g = grads[id];
        if (g.size() == 0) g = Tensor(nodes_[id].value.rows(), nodes_[id].value.cols());
        return g;
    };

    for (NodeId id = loss + 1; id-- > 0;) {
        if (!grads.has(id)) continue;
        const TapeNode& n = nodes_[id];
        const Tensor& g = grads[id];
        switch (n.kind) {
            case OpKind::input:
                break;
            case OpKind::matmul: {
                const Tensor& a = nodes_[n.inputs[0]].value;
                const Tensor& b = nodes_[n.inputs[1]].value;
                Tensor& ga = ensure(n.inputs[0]);
                Tensor& gb = ensure(n.inputs[1]);
                // ga += g * b^T
                for (std::size_t i = 0; i < a.rows(); ++i)
                    for (std::size_t j = 0; j < a.cols(); ++j) {
                        double acc = 0.0;
                        for (std::size_t k = 0; k < b.cols(); ++k)
                            acc += g.at(i, k) * b.at(j, k);
                        ga.at(i, j) += acc;
                    }
                // gb += a^T * g
                for (std::size_t i = 0; i < a.rows(); ++i)
                    for (std::size_t j = 0; j < a.cols(); ++j) {
                        double av = a.at(i, j);
                        if (av == 0.0) continue;
                        for (std::size_t k = 0; k < b.cols(); ++k)
                            gb.at(j, k) += av * g.at(i, k);
                    }
                break;
            }
            case OpKind::add: {
                const Tensor& a = nodes_[n.inputs[0]].value;
                const Tensor& b = nodes_[n.inputs[1]].value;
                Tensor& ga = ensure(n.inputs[0]);
                Tensor& gb = ensure(n.inputs[1]);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                if (b.rows() == 1 && a.rows() != 1) {
                    for (std::size_t r = 0; r < a.rows(); ++r)
                        for (std::size_t c = 0; c < a.cols(); ++c) gb[c] += g.at(r, c);
                } else {
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                }
                break;
            }
            case OpKind::concat_cols: {
                const Tensor& a = nodes_[n.inputs[0]].value;
                const Tensor& b = nodes_[n.inputs[1]].value;
                Tensor& ga = ensure(n.inputs[0]);
                Tensor& gb = ensure(n.inputs[1]);
                for (std::size_t r = 0; r < a.rows(); ++r) {
                    for (std::size_t c = 0; c < a.cols(); ++c) ga.at(r, c) += g.at(r, c);
                    for (std::size_t c = 0; c < b.cols(); ++c)
                        gb.at(r, c) += g.at(r, a.cols() + c);
                }
                break;
            }
            case OpKind::relu: {
                const Tensor& a = nodes_[n.inputs[0]].value;
                Tensor& ga = ensure(n.inputs[0]);
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (a[i] > 0.0) ga[i] += g[i];
                break;
            }
            case OpKind::leaky_relu: {
                const Tensor& a = nodes_[n.inputs[0]].value;
                Tensor& ga = ensure(n.inputs[0]);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] += a[i] > 0.0 ? g[i] : n.scalar_arg * g[i];
                break;
            }
            case OpKind::sigmoid: {
                Tensor& ga = ensure(n.inputs[0]);
                for (std::size_t i = 0; i < g.size(); ++i)
                    ga[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
                break;
            }
            case OpKind::elementwise_mul: {
                const Tensor& a = nodes_[n.inputs[0]].value;
                const Tensor& b = nodes_[n.inputs[1]].value;
                Tensor& ga = ensure(n.inputs[0]);
                Tensor& gb = ensure(n.inputs[1]);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga[i] += g[i] * b[i];
                    gb[i] += g[i] * a[i];
                }
                break;
            }
            case OpKind::l2_normalize_rows: {
                const Tensor& a = nodes_[n.inputs[0]].value;
                Tensor& ga = ensure(n.inputs[0]);
                for (std::size_t r = 0; r < a.rows(); ++r) {
                    double sq = 0.0;
                    for (std::size_t c = 0; c < a.cols(); ++c) sq += a.at(r, c) * a.at(r, c);
                    double norm = std::sqrt(sq);
                    if (norm == 0.0) continue;
                    double dot = 0.0;
                    for (std::size_t c = 0; c < a.cols(); ++c)
                        dot += g.at(r, c) * n.value.at(r, c);
                    for (std::size_t c = 0; c < a.cols(); ++c)
                        ga.at(r, c) += (g.at(r, c) - dot * n.value.at(r, c)) / norm;
                }
                break;
            }
            case OpKind::gather_rows: {
                const IndexVec& idx = *n.indices;
                for (std::size_t r = 0; r < idx.size(); ++r)
                    for (std::size_t c = 0; c < n.value.cols(); ++c)
                        accumulate(n.inputs[0], idx[r], c, g.at(r, c));
                break;
            }
            case OpKind::segment_mean: {
                const IndexVec& off = *n.offsets;
                for (std::size_t s = 0; s + 1 < off.size(); ++s) {
                    std::size_t len = off[s + 1] - off[s];
                    if (len == 0) continue;
                    double inv = 1.0 / static_cast<double>(len);
                    for (std::size_t r = off[s]; r < off[s + 1]; ++r)
                        for (std::size_t c = 0; c < n.value.cols(); ++c)
                            accumulate(n.inputs[0], r, c, g.at(s, c) * inv);
                }
                break;
            }
            case OpKind::segment_max: {
                const IndexVec& win = *n.argmax;
                for (std::size_t s = 0; s < n.value.rows(); ++s)
                    for (std::size_t c = 0; c < n.value.cols(); ++c) {
                        std::uint32_t r = win[s * n.value.cols() + c];
                        if (r != UINT32_MAX) accumulate(n.inputs[0], r, c, g.at(s, c));
                    }
                break;
            }
            case OpKind::segment_softmax_weighted_sum: {
                const IndexVec& off = *n.offsets;
                const std::vector<double>& w = *n.aux;
                const Tensor& values = nodes_[n.inputs[1]].value;
                Tensor& gs = ensure(n.inputs[0]);
                Tensor& gv = ensure(n.inputs[1]);
                std::size_t dim = values.cols();
                for (std::size_t s = 0; s + 1 < off.size(); ++s) {
                    if (off[s] == off[s + 1]) continue;
                    // d out_s / d score_r: softmax Jacobian applied to the
                    // per-row dot products of value rows with the upstream row.
                    double mean_dot = 0.0;
                    for (std::size_t r = off[s]; r < off[s + 1]; ++r) {
                        double dot = 0.0;
                        for (std::size_t c = 0; c < dim; ++c)
                            dot += values.at(r, c) * g.at(s, c);
                        mean_dot += w[r] * dot;
                    }
                    for (std::size_t r = off[s]; r < off[s + 1]; ++r) {
                        double dot = 0.0;
                        for (std::size_t c = 0; c < dim; ++c)
                            dot += values.at(r, c) * g.at(s, c);
                        gs.at(r, 0) += w[r] * (dot - mean_dot);
                        for (std::size_t c = 0; c < dim; ++c)
                            gv.at(r, c) += w[r] * g.at(s, c);
                    }
                }
                break;
            }
            case OpKind::sum_all: {
                Tensor& ga = ensure(n.inputs[0]);
                double gv = g[0];
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gv;
                break;
            }
            case OpKind::weighted_bce_logits: {
                const std::vector<double>& labels = *n.aux;
                const Tensor& z = nodes_[n.inputs[0]].value;
                Tensor& ga = ensure(n.inputs[0]);
                double scale = g[0] / static_cast<double>(labels.size());
                for (std::size_t i = 0; i < labels.size(); ++i)
                    ga[i] += scale * bce_term_dlogit(z[i], labels[i], n.scalar_arg);
                break;
            }
        }
        if (n.kind != OpKind::input)
            for (NodeId in : n.inputs)
                if (grads.has(in) && !grads[in].all_finite())
                    throw NumericError(std::string("non-finite gradient through ") +
                                       op_name(n.kind));
    }
    return grads;
}

double grad_check(const TapeBuilder& build, const ParamSet& params, double eps) {
    if (!(eps > 0.0) || eps > 1e-2)
        throw NumericError("grad_check: eps must be in (0, 1e-2]");

    auto eval = [&](const ParamSet& p, Tape& tape) {
        std::vector<NodeId> ids;
        ids.reserve(p.size());
        for (const auto& [name, tensor] : p) {
            (void)name;
            ids.push_back(tape.input(tensor));
        }
        return build(tape, ids);
    };

    Tape tape;
    NodeId loss = eval(params, tape);
    Gradients grads = tape.backward(loss);

    // Central differences cannot resolve slopes below the rounding noise of
    // the loss value itself; differences inside that band are agreement, not
    // error. 256 ulps covers forward-pass accumulation and O(eps^2)
    // truncation with a wide margin while staying orders of magnitude under
    // any real gradient defect.
    const double f0 = tape.value(loss)[0];
    const double noise = 256.0 * std::numeric_limits<double>::epsilon() *
                         std::max(1.0, std::abs(f0)) / (2.0 * eps);

    double worst = 0.0;
    ParamSet probe = params;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const Tensor& base = params[p].second;
        // inputs were registered in ParamSet order, so node id == position
        NodeId node = static_cast<NodeId>(p);
        for (std::size_t i = 0; i < base.size(); ++i) {
            double saved = base[i];
            Tensor& slot = probe[p].second;

            slot[i] = saved + eps;
            Tape tp;
            double fp = tp.value(eval(probe, tp))[0];
            slot[i] = saved - eps;
            Tape tm;
            double fm = tm.value(eval(probe, tm))[0];
            slot[i] = saved;

            double numeric = (fp - fm) / (2.0 * eps);
            double analytic = grads.has(node) ? grads[node][i] : 0.0;
            double diff = std::abs(numeric - analytic);
            if (diff <= noise) continue;
            double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
            worst = std::max(worst, diff / denom);
        }
    }
    return worst;
}

}  // namespace fairsage
