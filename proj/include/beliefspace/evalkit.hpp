#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "beliefspace/corpus.hpp"
#include "beliefspace/dissonance.hpp"
#include "beliefspace/encoder.hpp"
#include "beliefspace/predict.hpp"
#include "beliefspace/triplets.hpp"

namespace beliefspace {

struct TripletEvalReport {
    size_t n = 0;
    double accuracy = 0.0; // strict d(a,p) < d(a,n); equal distances fail
    std::string split;
};

TripletEvalReport eval_triplets(const EncoderModel& model, const Corpus& corpus,
                                std::span<const Triplet> triplets, std::string split);

struct StsPair {
    std::string sentence_a;
    std::string sentence_b;
    double score = 0.0; // human score in [0, 5]
};

// TSV, three columns sentence_a, sentence_b, score; no header.
std::vector<StsPair> load_sts_tsv(const std::filesystem::path& path);

// Spearman between human scores and cosine similarity of the embeddings.
double eval_sts(const EncoderModel& model, std::span<const StsPair> pairs);

struct PipelineConfig {
    uint32_t k = 5;
    uint64_t seed = 0;
    TrainConfig train;
    uint32_t max_pos = 5;
    uint32_t max_neg = 5;
    bool force_opposite = true;
    double dstar_bin_width = 0.1;
    double dstar_range_max = 1.2;
    double distance_bin_width = 1.0;
    std::optional<std::filesystem::path> sts_path;
    // When set, skip training and answer every encode from this store.
    std::optional<std::filesystem::path> precomputed_vectors;
    bool reuse_models = true;
    bool write_plots = false;
};

struct PipelineReport {
    nlohmann::json aggregate;
    std::vector<nlohmann::json> folds;
    size_t folds_succeeded = 0;
};

// Full fold-wise run: triplet sampling, training (or precomputed loading),
// triplet eval on train and test triplets, prediction, metrics, dissonance
// analyses. Per-fold artifacts land in outdir/fold_<i>/ with an aggregate
// mean/stddev report in outdir/aggregate.json. A failing fold is recorded
// with a diagnostic; other folds proceed.
PipelineReport run_pipeline(const Corpus& corpus, const ProfileSet* profiles,
                            const PipelineConfig& config, const std::filesystem::path& outdir);

// Recomputes the aggregate from fold_*/report.json files in a finished run
// directory (the `report` CLI command).
nlohmann::json aggregate_run_dir(const std::filesystem::path& outdir);

nlohmann::json metric_report_json(const MetricReport& r);
void write_dstar_curve_csv(const DstarCurve& curve, const std::filesystem::path& path);
void write_bins_csv(std::span<const Bin> bins, const std::filesystem::path& path);

} // namespace beliefspace
