#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fairsage/graph.hpp"

namespace fairsage {

struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

// Positive prediction iff score > threshold, strictly.
ConfusionMatrix confusion(const std::vector<double>& scores,
                          const std::vector<std::int8_t>& labels, double threshold);

// Ratios with explicit undefined flags: a zero denominator never turns into
// a silent 0 without its flag being cleared.
struct Prf {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_defined = true;
    bool recall_defined = true;
    bool f1_defined = true;
};

Prf prf(const ConfusionMatrix& cm);

// Mann-Whitney statistic via average ranks: (concordant + half the ties)
// over (#pos * #neg). Exact for the pair-counting definition because every
// intermediate is a half-integer below 2^53.
double auc(const std::vector<double>& scores, const std::vector<std::int8_t>& labels);

struct GroupFairness {
    std::string group;
    ConfusionMatrix cm;
    double fpr = 0.0;  // fp / (fp + tn)
    bool fpr_defined = false;
};

struct FairnessReport {
    GroupFairness protected_group;
    GroupFairness rest;
    double fpr_gap = 0.0;  // FPR(protected) - FPR(rest)
    bool gap_defined = false;
    ConfusionMatrix overall;
    Prf overall_prf;
};

// Predictive equality check: false positive rates for the protected group
// against everyone else.
FairnessReport fairness_report(const std::vector<double>& scores,
                               const std::vector<std::int8_t>& labels,
                               const std::vector<std::string>& groups,
                               const std::string& protected_group, double threshold);

struct CohortStats {
    std::string name;  // tp, fp, tn, fn
    bool present = false;
    std::size_t count = 0;
    double hateful_neighbor_fraction = 0.0;
    double mean_lexicon = 0.0;
    double mean_feature = 0.0;
    bool has_feature = false;
};

// Splits scored nodes into confusion cohorts and reports, per cohort, the
// fraction with at least one hateful-labeled neighbor (either direction),
// the mean lexicon count, and optionally the mean of a designated feature.
// Unlabeled neighbors never count as hateful. `node_labels`, `lexicon`, and
// `feature` are graph-aligned; `feature` may be empty.
std::array<CohortStats, 4> error_cohort_stats(const DirectedGraph& g,
                                              const std::vector<std::uint32_t>& nodes,
                                              const std::vector<double>& scores,
                                              const std::vector<std::int8_t>& node_labels,
                                              double threshold,
                                              const std::vector<double>& lexicon,
                                              const std::vector<double>& feature);

struct PredictionRow {
    std::uint64_t node_id = 0;  // external id
    std::int8_t label = 0;
    std::string group;
    double score = 0.0;
};

// Delimited text with a node_id/label/group/score header. Scores print with
// 17 significant digits, so a round trip is bitwise.
void write_predictions(const std::string& path, const std::vector<PredictionRow>& rows);
std::vector<PredictionRow> read_predictions(const std::string& path);

}  // namespace fairsage
