#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "beliefspace/corpus.hpp"
#include "beliefspace/rng.hpp"

namespace beliefspace {

// Symmetric vote co-occurrence counts between belief keys, plus per-key vote
// counts. counts(a, opposite(a)) is structurally zero: a user holds one
// stance per debate.
class CoocTable {
public:
    struct Neighbor {
        BeliefKey key;
        uint32_t count = 0;
    };

    uint32_t count(BeliefKey a, BeliefKey b) const;
    // Co-occurring keys with counts, sorted by key. Empty for unseen keys.
    const std::vector<Neighbor>& neighbors(BeliefKey k) const;
    uint32_t votes(BeliefKey k) const;
    // All keys with >=1 vote, sorted.
    const std::vector<BeliefKey>& keys_with_votes() const { return keys_; }
    size_t pair_entries() const { return n_pairs_; }

private:
    friend CoocTable build_cooc(const Corpus&, const std::vector<uint8_t>*);
    std::unordered_map<uint64_t, std::vector<Neighbor>> adj_;
    std::unordered_map<uint64_t, uint32_t> votes_;
    std::vector<BeliefKey> keys_;
    size_t n_pairs_ = 0;
};

// Counts, per user, every unordered pair of that user's beliefs. When
// `debate_filter` is given, only votes on debates with a nonzero mask entry
// participate (used to restrict to a train fold).
CoocTable build_cooc(const Corpus& corpus, const std::vector<uint8_t>* debate_filter = nullptr);

struct Triplet {
    BeliefKey anchor;
    BeliefKey positive;
    BeliefKey negative;

    friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct TripletSamplerConfig {
    uint32_t max_pos = 5;
    uint32_t max_neg = 5;
    // Include opposite(anchor) as the first negative whenever it has train
    // votes. Off only for ablation runs.
    bool force_opposite = true;
    uint64_t seed = 0;
};

struct SamplerReport {
    size_t anchors_total = 0;
    size_t anchors_emitted = 0;
    size_t skipped_no_positive = 0;
    size_t skipped_no_negative = 0;
};

// Anchors iterate over every belief key with at least one vote in the table.
// Positives: weighted-without-replacement from the anchor's co-occurrers,
// weights = raw counts. Negatives: opposite(anchor) plus co-occurrers of the
// opposite. Emits the positive x negative cross product per anchor. Each
// anchor draws from its own substream derived from (seed, debate_id, pol),
// so output is independent of anchor processing order.
std::vector<Triplet> sample_triplets(const CoocTable& cooc, const Corpus& corpus,
                                     const TripletSamplerConfig& config,
                                     SamplerReport* report = nullptr);

struct TripletStats {
    size_t n_triplets = 0;
    size_t n_anchors = 0;
    size_t max_per_anchor = 0;
    double mean_per_anchor = 0.0;
    double direct_opposite_fraction = 0.0; // negatives equal to opposite(anchor)
    std::map<std::string, size_t> per_category; // by anchor debate category; "" = uncategorized
};

TripletStats triplet_stats(const std::vector<Triplet>& triplets, const Corpus& corpus);

// CSV dump, header anchor_debate,anchor_pol,pos_debate,pos_pol,neg_debate,neg_pol.
void write_triplets_csv(const std::vector<Triplet>& triplets, const Corpus& corpus,
                        const std::filesystem::path& path);
std::vector<Triplet> read_triplets_csv(const Corpus& corpus, const std::filesystem::path& path);

namespace detail {
// Sequential weighted sampling without replacement: k draws, each with
// probability proportional to the remaining weights. Returns indices.
std::vector<size_t> weighted_sample_without_replacement(Rng& rng, std::vector<double> weights,
                                                        size_t k);
} // namespace detail

} // namespace beliefspace
