#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "beliefspace/corpus.hpp"
#include "beliefspace/triplets.hpp"

namespace beliefspace {

// Hash seed for the feature hasher. Fixed constant so feature vectors are
// stable across platforms and runs unless deliberately overridden.
inline constexpr uint64_t kDefaultHashSeed = 0x62656c6965667331ull;

struct FeatureSpec {
    uint64_t buckets = 1ull << 18;
    uint64_t hash_seed = kDefaultHashSeed;

    friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

// Sparse L2-normalized feature vector; entries sorted by index, unique.
struct SparseVec {
    std::vector<std::pair<uint32_t, double>> entries;
};

// Lowercase, split on non-alphanumerics, emit word unigrams and bigrams,
// hash into `buckets`, L2-normalize the counts. Text with no tokens is a
// data error.
SparseVec featurize(std::string_view text, const FeatureSpec& spec);

struct TrainConfig {
    uint32_t dim = 64;
    double margin = 5.0;        // triplet margin epsilon
    double learning_rate = 0.05;
    uint32_t epochs = 10;
    uint32_t batch_size = 64;
    uint64_t seed = 0;
    uint64_t feature_buckets = 1ull << 18;
    uint64_t hash_seed = kDefaultHashSeed;

    void validate() const;
    FeatureSpec feature_spec() const { return FeatureSpec{feature_buckets, hash_seed}; }
};

// max(||a-p|| - ||a-n|| + margin, 0) with Euclidean norms.
double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin);

// One encode interface over two backends: a linear map on hashed n-gram
// features trained with the triplet loss, or a store of precomputed vectors
// keyed by exact statement text.
class EncoderModel {
public:
    enum class Backend : uint8_t { Trained = 1, Precomputed = 2 };

    static EncoderModel trained(FeatureSpec spec, uint32_t dim, std::vector<double> weights);
    static EncoderModel precomputed(uint32_t dim,
                                    std::vector<std::pair<std::string, std::vector<double>>> entries);

    Backend backend() const { return backend_; }
    uint32_t dim() const { return dim_; }
    const FeatureSpec& feature_spec() const { return spec_; }
    const std::vector<double>& weights() const { return weights_; } // m x dim row-major

    std::vector<double> encode(std::string_view text) const;

    void save(const std::filesystem::path& path) const;
    static EncoderModel load(const std::filesystem::path& path);

private:
    EncoderModel() = default;
    Backend backend_ = Backend::Trained;
    uint32_t dim_ = 0;
    FeatureSpec spec_;
    std::vector<double> weights_;
    // Precomputed store. Entry order is preserved so save/load round-trips
    // bit-exactly.
    std::vector<std::pair<std::string, std::vector<double>>> store_;
    std::unordered_map<std::string, size_t> store_index_;
};

struct LossTrace {
    double initial = 0.0;            // full-set mean loss before any update
    std::vector<double> per_epoch;   // mean of batch losses, measured pre-update
    double final_full = 0.0;         // full-set mean loss after training
};

// Mini-batch subgradient descent on the mean triplet loss. Weight init and
// batch order come from named substreams of config.seed; identical inputs
// give identical weights and trace. Non-finite loss or weights abort.
EncoderModel train_encoder(const std::vector<Triplet>& triplets, const Corpus& corpus,
                           const TrainConfig& config, LossTrace* trace = nullptr);

// Precomputed-vector files: JSON Lines {"text","vector"} or binary columnar
// "BLFV". Sniffed by magic.
std::vector<std::pair<std::string, std::vector<double>>> load_vectors(
    const std::filesystem::path& path);
void save_vectors_blfv(const std::vector<std::pair<std::string, std::vector<double>>>& entries,
                       uint32_t dim, const std::filesystem::path& path);

namespace detail {

// Featurized triplet over an external feature table.
struct FeatTriplet {
    uint32_t a = 0, p = 0, n = 0;
};

std::vector<double> encode_features(const std::vector<double>& weights, uint32_t dim,
                                    const SparseVec& f);

double mean_loss(const std::vector<double>& weights, uint32_t dim,
                 const std::vector<SparseVec>& feats, std::span<const FeatTriplet> triplets,
                 double margin);

// Mean-loss gradient with respect to every weight, dense, same shape as
// weights. Subgradient 0 at the hinge kink and at zero-distance pairs.
void mean_loss_gradient(const std::vector<double>& weights, uint32_t dim,
                        const std::vector<SparseVec>& feats, std::span<const FeatTriplet> triplets,
                        double margin, std::vector<double>& grad_out);

// Applies one SGD step on `batch` in place; returns the batch mean loss
// measured before the update.
double sgd_batch(std::vector<double>& weights, uint32_t dim, const std::vector<SparseVec>& feats,
                 std::span<const FeatTriplet> batch, double margin, double learning_rate);

} // namespace detail

} // namespace beliefspace
