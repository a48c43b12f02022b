#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "beliefspace/corpus.hpp"
#include "beliefspace/encoder.hpp"
#include "beliefspace/space.hpp"

namespace beliefspace {

// One (user, test debate) prediction. d_min/d_max are the distances from the
// user's position to the nearer and farther of the two opposing statement
// vectors; d_star = (d_max - d_min) / d_min, absent when d_min == 0.
struct PredictionOutcome {
    std::string user_id;
    std::string debate_id;
    std::string category; // "" = uncategorized
    double d_min = 0.0;
    double d_max = 0.0;
    double d_avg = 0.0;
    std::optional<double> d_star;
    Polarity predicted = Polarity::Pro;
    Polarity truth = Polarity::Pro;
    bool correct = false;
    bool tie = false;
};

struct StancePrediction {
    double d_min = 0.0;
    double d_max = 0.0;
    double d_avg = 0.0;
    double d_pro = 0.0;
    double d_con = 0.0;
    Polarity predicted = Polarity::Pro;
    bool tie = false;
};

// Encodes both templated statements for the title and picks the polarity of
// the nearer one; exact ties go to `tie_break` (train majority) and are
// flagged.
StancePrediction predict_stance(const EncoderModel& model, std::span<const double> user_vec,
                                std::string_view title, Polarity tie_break);

Polarity train_majority(const Corpus& corpus, const FoldSplit& fold);

struct FoldRunResult {
    std::vector<PredictionOutcome> outcomes; // sorted by (user_id, debate_id)
    std::vector<std::string> skipped_users;  // voters who are not evaluable in this fold
    Polarity majority = Polarity::Pro;
    // Train-fold vote count per evaluable user (history length L_v).
    std::map<std::string, uint32_t> history_len;
};

// One outcome per (evaluable user, test vote). User embeddings are computed
// from train-fold votes only.
FoldRunResult run_fold(const EncoderModel& model, const Corpus& corpus, const FoldSplit& fold);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    size_t support = 0; // truth count
};

struct MetricReport {
    double accuracy = 0.0;
    double macro_f1 = 0.0; // unweighted mean over {PRO, CON}; absent class scores 0
    ClassMetrics pro;
    ClassMetrics con;
    size_t n = 0;
};

MetricReport compute_metrics(std::span<const PredictionOutcome> outcomes);

// Uniform coin per prediction, scored against the outcomes' truths.
MetricReport baseline_random(std::span<const PredictionOutcome> outcomes, uint64_t seed);
// Constant prediction of the train set's more frequent polarity.
MetricReport baseline_majority(Polarity majority, std::span<const PredictionOutcome> outcomes);

struct CategoryMetrics {
    std::string category;
    MetricReport report;
};

std::vector<CategoryMetrics> metrics_by_category(std::span<const PredictionOutcome> outcomes);

// Cumulative history-length curve: one point per distinct observed train
// history length h, covering users with history < l_v = h + 1. Vote-level
// metrics pool outcomes; user_mean_accuracy averages per-user accuracies.
struct HistoryPoint {
    uint32_t l_v = 0;
    size_t n_users = 0;
    size_t n_votes = 0;
    double vote_accuracy = 0.0;
    double vote_macro_f1 = 0.0;
    double user_mean_accuracy = 0.0;
};

std::vector<HistoryPoint> metrics_by_history(std::span<const PredictionOutcome> outcomes,
                                             const std::map<std::string, uint32_t>& history_len);

struct Bin {
    double lo = 0.0;
    double hi = 0.0;
    size_t n = 0;
    std::optional<double> accuracy; // absent when n == 0
};

struct GridCell {
    size_t i = 0; // d_min bin index
    size_t j = 0; // d_max bin index
    size_t n = 0;
    std::optional<double> accuracy;
};

struct DistanceResponse {
    double width = 0.0;
    std::vector<Bin> vs_dmin;
    std::vector<Bin> vs_dmax;
    std::vector<Bin> vs_davg;
    std::vector<GridCell> grid; // full rectangle over observed index ranges
};

DistanceResponse distance_response(std::span<const PredictionOutcome> outcomes, double bin_width);

// outcomes CSV, pinned schema:
// user_id,debate_id,category,d_min,d_max,d_avg,d_star,predicted,truth,correct,tie
void write_outcomes_csv(std::span<const PredictionOutcome> outcomes,
                        const std::filesystem::path& path);
std::vector<PredictionOutcome> read_outcomes_csv(const std::filesystem::path& path);

} // namespace beliefspace
