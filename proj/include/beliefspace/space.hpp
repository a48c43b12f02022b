#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beliefspace/corpus.hpp"
#include "beliefspace/encoder.hpp"
#include "beliefspace/stats.hpp"

namespace beliefspace {

struct PcaModel {
    std::vector<double> mean;        // d
    std::vector<double> components;  // q x d row-major, rows orthonormal
    std::vector<double> eigenvalues; // q, descending

    uint32_t dim() const { return static_cast<uint32_t>(mean.size()); }
    uint32_t q() const {
        return mean.empty() ? 0 : static_cast<uint32_t>(components.size() / mean.size());
    }
    std::span<const double> component(uint32_t i) const {
        return {components.data() + static_cast<size_t>(i) * mean.size(), mean.size()};
    }
};

// PCA by SVD of the centered matrix; eigenvalue_i = s_i^2 / (n-1). Component
// signs are fixed so each row's largest-magnitude entry is positive.
PcaModel fit_pca(const std::vector<std::vector<double>>& vectors, uint32_t q);

// components * (v - mean).
std::vector<double> project(const PcaModel& pca, std::span<const double> v);

// Case-insensitive whole-word match of any keyword against debate titles.
// Multi-word keywords match as consecutive token runs. Returns both
// polarities of every matching debate, sorted.
std::vector<BeliefKey> select_by_keywords(const Corpus& corpus,
                                          const std::vector<std::string>& keywords);

struct UserEmbedding {
    uint32_t user = 0;
    std::vector<double> vec; // arithmetic mean of the user's belief vectors
    uint32_t support = 0;    // beliefs averaged
};

struct UserEmbeddingReport {
    std::vector<uint32_t> excluded_users; // zero qualifying votes
};

// Mean of encode(statement) over each user's votes, optionally restricted to
// debates with a nonzero mask entry (train fold). Users with no qualifying
// votes are excluded and reported.
std::vector<UserEmbedding> user_embeddings(const EncoderModel& model, const Corpus& corpus,
                                           std::span<const uint32_t> users,
                                           const std::vector<uint8_t>* debate_restriction = nullptr,
                                           UserEmbeddingReport* report = nullptr);

struct PolarizationRecord {
    std::string issue;
    double euclid_distance = 0.0;
    double cosine_distance = 0.0;
    size_t n_pro = 0;
    size_t n_con = 0;
};

// Distance between the PRO-group and CON-group centroids of user embeddings
// on one big issue, in the original d-dimensional space. OTHER stances and
// users without an embedding or profile are ignored; an empty side is an
// error naming the issue.
PolarizationRecord polarization(const std::vector<UserEmbedding>& embeddings, const Corpus& corpus,
                                const ProfileSet& profiles, const std::string& issue);

// |ProRatio_A - ProRatio_B| on one issue, ProRatio = PRO / (PRO + CON)
// within the party; OTHER excluded. Empty denominator is an error.
double pro_ratio_gap(const ProfileSet& profiles, const std::string& issue,
                     const std::string& party_a, const std::string& party_b);

enum class CorrMethod { Pearson, Spearman };

double correlate(std::span<const double> x, std::span<const double> y, CorrMethod method);

} // namespace beliefspace
