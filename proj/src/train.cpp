#include "fairsage/train.hpp"

#include <algorithm>
#include <cmath>

#include "fairsage/errors.hpp"
#include "fairsage/sampling.hpp"

namespace fairsage {

double class_weight(const std::vector<std::int8_t>& labels) {
    if (labels.empty()) throw DataError("class weight needs a nonempty label set");
    std::size_t pos = 0, neg = 0;
    for (std::int8_t l : labels) {
        if (l == kLabelHateful)
            ++pos;
        else if (l == kLabelNormal)
            ++neg;
        else
            throw DataError("class weight saw an unlabeled node");
    }
    if (pos == 0 || neg == 0) throw DataError("training labels hold a single class");
    return static_cast<double>(neg) / static_cast<double>(pos);
}

double weighted_bce_loss(const std::vector<double>& logits, const std::vector<double>& labels,
                         double pos_weight) {
    if (logits.size() != labels.size())
        throw NumericError("loss needs matching logit and label counts");
    if (logits.empty()) throw NumericError("loss over an empty batch");
    if (!std::isfinite(pos_weight) || pos_weight <= 0.0)
        throw NumericError("positive class weight required");
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!std::isfinite(logits[i])) throw NumericError("non-finite logit in loss");
        if (labels[i] != 0.0 && labels[i] != 1.0) throw NumericError("labels must be 0 or 1");
        total += bce_term(logits[i], labels[i], pos_weight);
    }
    return total / static_cast<double>(logits.size());
}

AdamState::AdamState(const ParamSet& params) {
    m.reserve(params.size());
    v.reserve(params.size());
    for (const auto& [name, t] : params) {
        m.emplace_back(t.rows(), t.cols());
        v.emplace_back(t.rows(), t.cols());
    }
}

void adam_step(ParamSet& params, const Gradients& grads, const std::vector<NodeId>& pids,
               AdamState& state, const AdamHyper& hyper) {
    if (state.m.size() != params.size() || pids.size() != params.size())
        throw NumericError("optimizer state does not match the parameter set");
    state.step += 1;
    const double b1c = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
    const double b2c = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = params[i].second;
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        if (!m.same_shape(p) || !v.same_shape(p))
            throw NumericError("optimizer moments do not match parameter " + params[i].first);
        const Tensor* g = grads.has(pids[i]) ? &grads[pids[i]] : nullptr;
        if (g != nullptr && !g->same_shape(p))
            throw NumericError("gradient shape does not match parameter " + params[i].first);
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = g != nullptr ? (*g)[j] : 0.0;
            m[j] = hyper.beta1 * m[j] + (1.0 - hyper.beta1) * gj;
            v[j] = hyper.beta2 * v[j] + (1.0 - hyper.beta2) * gj * gj;
            const double mhat = m[j] / b1c;
            const double vhat = v[j] / b2c;
            p[j] -= hyper.lr * mhat / (std::sqrt(vhat) + hyper.eps);
        }
        if (!p.all_finite())
            throw NumericError("parameter " + params[i].first + " diverged during the update");
    }
}

FoldPlan stratified_kfold(const std::vector<std::uint32_t>& nodes,
                          const std::vector<std::int8_t>& labels, std::size_t k,
                          std::uint64_t seed) {
    if (k < 2) throw UsageError("cross-validation needs k >= 2");
    if (nodes.size() != labels.size())
        throw DataError("fold input nodes and labels differ in length");
    {
        std::vector<std::uint32_t> sorted(nodes);
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw DataError("fold input lists a node twice");
    }
    std::vector<std::uint32_t> pos, neg;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (labels[i] == kLabelHateful)
            pos.push_back(nodes[i]);
        else if (labels[i] == kLabelNormal)
            neg.push_back(nodes[i]);
        else
            throw DataError("fold input includes an unlabeled node");
    }
    if (pos.size() < k || neg.size() < k)
        throw UsageError("each class needs at least k labeled nodes");

    RngStream rng(seed, 0);
    sample_prefix(pos, pos.size(), rng);
    sample_prefix(neg, neg.size(), rng);

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.train_nodes.resize(k);
    plan.test_nodes.resize(k);
    // The positive remainder lands on the first folds, the negative on the
    // last, so total fold sizes stay within one node of each other.
    auto deal = [&](const std::vector<std::uint32_t>& cls, bool extras_first) {
        const std::size_t rem = cls.size() % k;
        std::size_t at = 0;
        for (std::size_t f = 0; f < k; ++f) {
            const bool extra = extras_first ? f < rem : f >= k - rem;
            const std::size_t take = cls.size() / k + (extra ? 1 : 0);
            for (std::size_t i = 0; i < take; ++i) plan.test_nodes[f].push_back(cls[at++]);
        }
    };
    deal(pos, true);
    deal(neg, false);
    for (std::size_t f = 0; f < k; ++f) {
        std::sort(plan.test_nodes[f].begin(), plan.test_nodes[f].end());
        for (std::size_t o = 0; o < k; ++o)
            if (o != f)
                plan.train_nodes[f].insert(plan.train_nodes[f].end(), plan.test_nodes[o].begin(),
                                           plan.test_nodes[o].end());
        std::sort(plan.train_nodes[f].begin(), plan.train_nodes[f].end());
    }
    return plan;
}

namespace {

void check_train_inputs(const ModelConfig& cfg, const TrainHyper& hyper, const DirectedGraph& g,
                        const Tensor& features, const std::vector<std::int8_t>& labels,
                        const FoldPlan& plan) {
    validate(cfg);
    if (hyper.batch == 0) throw UsageError("batch size must be positive");
    if (!(hyper.adam.lr > 0.0) || !std::isfinite(hyper.adam.lr))
        throw UsageError("learning rate must be positive");
    if (features.rows() != g.node_count)
        throw DataError("feature matrix must cover every graph node");
    if (features.cols() != cfg.feature_dim)
        throw UsageError("feature width " + std::to_string(features.cols()) +
                         " does not match the model input " + std::to_string(cfg.feature_dim));
    if (labels.size() != g.node_count) throw DataError("label vector must cover every graph node");
    if (plan.k == 0 || plan.train_nodes.size() != plan.k || plan.test_nodes.size() != plan.k)
        throw DataError("fold plan is empty or inconsistent");
    for (std::size_t f = 0; f < plan.k; ++f)
        for (const auto* list : {&plan.train_nodes[f], &plan.test_nodes[f]})
            for (std::uint32_t v : *list) {
                if (v >= g.node_count) throw DataError("fold plan names a node outside the graph");
                if (labels[v] != kLabelHateful && labels[v] != kLabelNormal)
                    throw DataError("fold plan includes an unlabeled node");
            }
}

}  // namespace

TrainResult train(const ModelConfig& cfg, const TrainHyper& hyper, const DirectedGraph& g,
                  const Tensor& features, const std::vector<std::int8_t>& labels,
                  const FoldPlan& plan, RngStream& rng) {
    check_train_inputs(cfg, hyper, g, features, labels, plan);
    TrainResult result;
    for (std::size_t f = 0; f < plan.k; ++f) {
        const std::vector<std::uint32_t>& tr = plan.train_nodes[f];
        if (tr.empty()) throw DataError("fold " + std::to_string(f) + " has no training nodes");
        std::vector<std::int8_t> tr_labels;
        tr_labels.reserve(tr.size());
        for (std::uint32_t v : tr) tr_labels.push_back(labels[v]);
        const double pos_weight = class_weight(tr_labels);

        Standardization stdz = fit_standardization(features, tr);
        Tensor x_all = features;
        stdz.apply(x_all);

        RngStream fold_rng = rng.child(f);
        RngStream init_rng = fold_rng.child(0);
        RngStream sample_rng = fold_rng.child(1);
        RngStream dropout_rng = fold_rng.child(2);
        RngStream shuffle_rng = fold_rng.child(3);

        ModelParams params = init_params(cfg, init_rng);
        AdamState state(params);
        std::vector<std::uint32_t> order(tr);
        std::vector<double> epoch_loss;
        epoch_loss.reserve(hyper.epochs);

        for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
            sample_prefix(order, order.size(), shuffle_rng);
            double fold_total = 0.0;
            for (std::size_t start = 0; start < order.size(); start += hyper.batch) {
                const std::size_t stop = std::min(order.size(), start + hyper.batch);
                const std::vector<std::uint32_t> batch(order.begin() + start,
                                                       order.begin() + stop);
                std::vector<double> batch_labels;
                batch_labels.reserve(batch.size());
                for (std::uint32_t v : batch)
                    batch_labels.push_back(labels[v] == kLabelHateful ? 1.0 : 0.0);

                Tape t;
                std::vector<NodeId> pids = bind_params(t, params);
                SampledBlock block;
                const SampledBlock* block_ptr = nullptr;
                NodeId x;
                if (cfg.kind == ModelKind::sage) {
                    block = sample_neighbors(g, batch, cfg.fanouts, cfg.direction, sample_rng);
                    x = t.input(select_rows(x_all, block.layer_nodes.back()));
                    block_ptr = &block;
                } else {
                    x = t.input(select_rows(x_all, batch));
                }
                NodeId z = model_logits(t, cfg, params, pids, x, block_ptr, true, &dropout_rng);
                NodeId loss = t.weighted_bce_logits(z, batch_labels, pos_weight);
                fold_total += t.value(loss)[0] * static_cast<double>(batch.size());
                Gradients grads = t.backward(loss);
                adam_step(params, grads, pids, state, hyper.adam);
            }
            epoch_loss.push_back(fold_total / static_cast<double>(order.size()));
        }

        RngStream eval_rng = fold_rng.child(4);
        const std::vector<std::uint32_t>& te = plan.test_nodes[f];
        FoldPredictions preds;
        preds.nodes = te;
        preds.labels.reserve(te.size());
        for (std::uint32_t v : te) preds.labels.push_back(labels[v]);
        if (!te.empty()) {
            if (cfg.kind == ModelKind::sage)
                preds.scores = sage_scores(cfg, params, g, x_all, te, eval_rng);
            else
                preds.scores = feature_model_scores(cfg, params, select_rows(x_all, te));
        }

        TrainRun run;
        run.fold = f;
        run.pos_weight = pos_weight;
        run.epoch_loss = std::move(epoch_loss);
        run.params = std::move(params);
        run.standardization = std::move(stdz);
        result.runs.push_back(std::move(run));
        result.predictions.push_back(std::move(preds));
    }
    return result;
}

}  // namespace fairsage
