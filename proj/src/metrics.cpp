#include "fairsage/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "fairsage/errors.hpp"
#include "fairsage/text.hpp"

namespace fairsage {

namespace {

void check_scored(const std::vector<double>& scores, const std::vector<std::int8_t>& labels,
                  double threshold) {
    if (scores.empty()) throw DataError("metrics need at least one scored node");
    if (scores.size() != labels.size())
        throw DataError("scores and labels differ in length");
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw UsageError("threshold must lie strictly inside (0, 1)");
    for (double s : scores)
        if (!std::isfinite(s)) throw NumericError("non-finite score");
    for (std::int8_t l : labels)
        if (l != 0 && l != 1) throw DataError("metrics need 0/1 labels only");
}

}  // namespace

ConfusionMatrix confusion(const std::vector<double>& scores,
                          const std::vector<std::int8_t>& labels, double threshold) {
    check_scored(scores, labels, threshold);
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] > threshold;
        if (labels[i] == 1)
            predicted ? ++cm.tp : ++cm.fn;
        else
            predicted ? ++cm.fp : ++cm.tn;
    }
    return cm;
}

Prf prf(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw DataError("confusion matrix covers no population");
    Prf out;
    out.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    out.precision_defined = cm.tp + cm.fp > 0;
    out.precision = out.precision_defined
                        ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp)
                        : 0.0;
    out.recall_defined = cm.tp + cm.fn > 0;
    out.recall = out.recall_defined
                     ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn)
                     : 0.0;
    out.f1_defined =
        out.precision_defined && out.recall_defined && out.precision + out.recall > 0.0;
    out.f1 = out.f1_defined ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                            : 0.0;
    return out;
}

double auc(const std::vector<double>& scores, const std::vector<std::int8_t>& labels) {
    if (scores.size() != labels.size())
        throw DataError("scores and labels differ in length");
    if (scores.empty()) throw DataError("auc needs scored nodes");
    std::size_t pos = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw DataError("auc needs 0/1 labels only");
        if (!std::isfinite(scores[i])) throw NumericError("non-finite score");
        if (labels[i] == 1) ++pos;
    }
    const std::size_t neg = scores.size() - pos;
    if (pos == 0 || neg == 0) throw DataError("auc needs both classes present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Tie groups share the average of their 1-based ranks, a half-integer.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = static_cast<double>(i + 1 + j + 1) / 2.0;
        for (std::size_t r = i; r <= j; ++r)
            if (labels[order[r]] == 1) pos_rank_sum += avg_rank;
        i = j + 1;
    }
    const double u = pos_rank_sum -
                     static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
    return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

FairnessReport fairness_report(const std::vector<double>& scores,
                               const std::vector<std::int8_t>& labels,
                               const std::vector<std::string>& groups,
                               const std::string& protected_group, double threshold) {
    check_scored(scores, labels, threshold);
    if (groups.size() != scores.size())
        throw DataError("scores and groups differ in length");
    if (protected_group.empty()) throw UsageError("protected group name must be nonempty");

    FairnessReport rep;
    rep.protected_group.group = protected_group;
    rep.rest.group = "rest";
    bool protected_seen = false;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] > threshold;
        const bool is_protected = groups[i] == protected_group;
        protected_seen = protected_seen || is_protected;
        ConfusionMatrix& cm = is_protected ? rep.protected_group.cm : rep.rest.cm;
        if (labels[i] == 1)
            predicted ? ++cm.tp : ++cm.fn;
        else
            predicted ? ++cm.fp : ++cm.tn;
    }
    if (!protected_seen)
        throw DataError("no scored node belongs to group '" + protected_group + "'");

    for (GroupFairness* gf : {&rep.protected_group, &rep.rest}) {
        const std::size_t negs = gf->cm.fp + gf->cm.tn;
        gf->fpr_defined = negs > 0;
        gf->fpr = gf->fpr_defined
                      ? static_cast<double>(gf->cm.fp) / static_cast<double>(negs)
                      : 0.0;
    }
    rep.gap_defined = rep.protected_group.fpr_defined && rep.rest.fpr_defined;
    rep.fpr_gap = rep.gap_defined ? rep.protected_group.fpr - rep.rest.fpr : 0.0;

    rep.overall.tp = rep.protected_group.cm.tp + rep.rest.cm.tp;
    rep.overall.fp = rep.protected_group.cm.fp + rep.rest.cm.fp;
    rep.overall.fn = rep.protected_group.cm.fn + rep.rest.cm.fn;
    rep.overall.tn = rep.protected_group.cm.tn + rep.rest.cm.tn;
    rep.overall_prf = prf(rep.overall);
    return rep;
}

std::array<CohortStats, 4> error_cohort_stats(const DirectedGraph& g,
                                              const std::vector<std::uint32_t>& nodes,
                                              const std::vector<double>& scores,
                                              const std::vector<std::int8_t>& node_labels,
                                              double threshold,
                                              const std::vector<double>& lexicon,
                                              const std::vector<double>& feature) {
    if (nodes.empty()) throw DataError("cohort statistics need scored nodes");
    if (nodes.size() != scores.size()) throw DataError("nodes and scores differ in length");
    if (node_labels.size() != g.node_count)
        throw DataError("node labels must cover every graph node");
    if (lexicon.size() != g.node_count)
        throw DataError("lexicon counts must cover every graph node");
    if (!feature.empty() && feature.size() != g.node_count)
        throw DataError("feature column must cover every graph node");
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw UsageError("threshold must lie strictly inside (0, 1)");

    std::array<CohortStats, 4> out;
    out[0].name = "tp";
    out[1].name = "fp";
    out[2].name = "tn";
    out[3].name = "fn";
    std::array<std::size_t, 4> with_hateful{};
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::uint32_t v = nodes[i];
        if (v >= g.node_count) throw DataError("scored node outside the graph");
        const std::int8_t label = node_labels[v];
        if (label != 0 && label != 1) throw DataError("cohorts need labeled nodes only");
        if (!std::isfinite(scores[i])) throw NumericError("non-finite score");
        const bool predicted = scores[i] > threshold;
        const std::size_t cohort = label == 1 ? (predicted ? 0 : 3) : (predicted ? 1 : 2);

        CohortStats& c = out[cohort];
        c.count += 1;
        bool hateful = false;
        for (std::uint32_t u : g.neighbors(v, Direction::both))
            if (node_labels[u] == 1) {
                hateful = true;
                break;
            }
        if (hateful) with_hateful[cohort] += 1;
        c.mean_lexicon += lexicon[v];
        if (!feature.empty()) c.mean_feature += feature[v];
    }
    for (std::size_t k = 0; k < 4; ++k) {
        CohortStats& c = out[k];
        c.present = c.count > 0;
        c.has_feature = c.present && !feature.empty();
        if (c.present) {
            c.hateful_neighbor_fraction =
                static_cast<double>(with_hateful[k]) / static_cast<double>(c.count);
            c.mean_lexicon /= static_cast<double>(c.count);
            if (c.has_feature)
                c.mean_feature /= static_cast<double>(c.count);
        }
    }
    return out;
}

void write_predictions(const std::string& path, const std::vector<PredictionRow>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "node_id\tlabel\tgroup\tscore\n";
    char buf[40];
    for (const PredictionRow& r : rows) {
        if (r.label != 0 && r.label != 1)
            throw DataError("prediction rows need 0/1 labels");
        if (!std::isfinite(r.score)) throw NumericError("non-finite score in predictions");
        std::snprintf(buf, sizeof buf, "%.17g", r.score);
        out << r.node_id << '\t' << static_cast<int>(r.label) << '\t' << r.group << '\t' << buf
            << '\n';
    }
    if (!out.flush()) throw DataError("cannot write " + path);
}

std::vector<PredictionRow> read_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty predictions file");
    const char delim = text::sniff_delimiter(line);
    std::vector<std::string> header = text::split(line, delim);
    if (header.size() != 4 || header[0] != "node_id" || header[1] != "label" ||
        header[2] != "group" || header[3] != "score")
        throw DataError(path + ": expected a node_id/label/group/score header");

    std::vector<PredictionRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        const std::vector<std::string> f = text::split(line, delim);
        if (f.size() != 4)
            throw DataError(path + ":" + std::to_string(lineno) + ": expected 4 fields");
        PredictionRow r;
        if (!text::parse_u64(f[0], r.node_id))
            throw DataError(path + ":" + std::to_string(lineno) + ": malformed node id");
        std::uint64_t label = 0;
        if (!text::parse_u64(f[1], label) || label > 1)
            throw DataError(path + ":" + std::to_string(lineno) + ": labels must be 0 or 1");
        r.label = static_cast<std::int8_t>(label);
        r.group = f[2];
        if (!text::parse_f64(f[3], r.score) || !std::isfinite(r.score))
            throw DataError(path + ":" + std::to_string(lineno) + ": malformed score");
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw DataError(path + ": no prediction rows");
    return rows;
}

}  // namespace fairsage
