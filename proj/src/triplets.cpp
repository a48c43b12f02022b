#include "beliefspace/triplets.hpp"

#include <algorithm>

#include "beliefspace/csv.hpp"

namespace beliefspace {

namespace {
const std::vector<CoocTable::Neighbor> kNoNeighbors;
}

uint32_t CoocTable::count(BeliefKey a, BeliefKey b) const {
    const auto it = adj_.find(a.packed());
    if (it == adj_.end()) return 0;
    const auto& vec = it->second;
    const auto pos = std::lower_bound(vec.begin(), vec.end(), b,
                                      [](const Neighbor& n, BeliefKey k) { return n.key < k; });
    if (pos == vec.end() || pos->key != b) return 0;
    return pos->count;
}

const std::vector<CoocTable::Neighbor>& CoocTable::neighbors(BeliefKey k) const {
    const auto it = adj_.find(k.packed());
    if (it == adj_.end()) return kNoNeighbors;
    return it->second;
}

uint32_t CoocTable::votes(BeliefKey k) const {
    const auto it = votes_.find(k.packed());
    if (it == votes_.end()) return 0;
    return it->second;
}

CoocTable build_cooc(const Corpus& corpus, const std::vector<uint8_t>* debate_filter) {
    if (corpus.debates().size() >= (1ull << 31))
        throw DataError("corpus too large for pair packing");
    CoocTable table;
    std::unordered_map<uint64_t, uint32_t> pair_counts; // (a<<32|b) over packed keys, a < b

    std::vector<uint64_t> keys;
    for (uint32_t u = 0; u < corpus.users().size(); ++u) {
        keys.clear();
        for (const auto& v : corpus.votes_of(u)) {
            if (debate_filter && !(*debate_filter)[v.debate]) continue;
            keys.push_back(BeliefKey{v.debate, v.pol}.packed());
        }
        for (uint64_t k : keys) ++table.votes_[k];
        // votes_of is sorted by debate, so keys are already ascending.
        for (size_t i = 0; i < keys.size(); ++i)
            for (size_t j = i + 1; j < keys.size(); ++j)
                ++pair_counts[(keys[i] << 32) | keys[j]];
    }

    table.n_pairs_ = pair_counts.size();
    for (const auto& [pk, c] : pair_counts) {
        const BeliefKey a = BeliefKey::unpack(pk >> 32);
        const BeliefKey b = BeliefKey::unpack(pk & 0xffffffffu);
        table.adj_[a.packed()].push_back({b, c});
        table.adj_[b.packed()].push_back({a, c});
    }
    for (auto& [k, vec] : table.adj_)
        std::sort(vec.begin(), vec.end(),
                  [](const CoocTable::Neighbor& x, const CoocTable::Neighbor& y) {
                      return x.key < y.key;
                  });

    table.keys_.reserve(table.votes_.size());
    for (const auto& [k, c] : table.votes_) table.keys_.push_back(BeliefKey::unpack(k));
    std::sort(table.keys_.begin(), table.keys_.end());
    return table;
}

namespace detail {

std::vector<size_t> weighted_sample_without_replacement(Rng& rng, std::vector<double> weights,
                                                        size_t k) {
    std::vector<size_t> picked;
    double total = 0.0;
    for (double w : weights) total += w;
    const size_t n = weights.size();
    while (picked.size() < k && total > 0.0) {
        double x = rng.uniform_real() * total;
        size_t chosen = n;
        for (size_t i = 0; i < n; ++i) {
            if (weights[i] <= 0.0) continue;
            if (x < weights[i]) {
                chosen = i;
                break;
            }
            x -= weights[i];
        }
        if (chosen == n) { // float round-off on the last active entry
            for (size_t i = n; i-- > 0;) {
                if (weights[i] > 0.0) {
                    chosen = i;
                    break;
                }
            }
            if (chosen == n) break;
        }
        picked.push_back(chosen);
        total -= weights[chosen];
        weights[chosen] = 0.0;
    }
    return picked;
}

} // namespace detail

std::vector<Triplet> sample_triplets(const CoocTable& cooc, const Corpus& corpus,
                                     const TripletSamplerConfig& config, SamplerReport* report) {
    if (config.max_pos == 0 || config.max_neg == 0)
        throw DataError("max_pos and max_neg must be positive");

    SamplerReport local;
    std::vector<Triplet> out;

    for (const BeliefKey anchor : cooc.keys_with_votes()) {
        ++local.anchors_total;

        const auto& pos_candidates = cooc.neighbors(anchor);
        if (pos_candidates.empty()) {
            ++local.skipped_no_positive;
            continue;
        }

        const BeliefKey opp = opposite(anchor);
        const auto& opp_neighbors = cooc.neighbors(opp);
        const uint32_t opp_votes = cooc.votes(opp);
        if (opp_votes == 0 && opp_neighbors.empty()) {
            ++local.skipped_no_negative;
            continue;
        }

        Rng rng = substream(config.seed, "anchor",
                            fnv1a(corpus.debates()[anchor.debate].id),
                            static_cast<uint64_t>(anchor.pol));

        std::vector<double> pos_weights(pos_candidates.size());
        for (size_t i = 0; i < pos_candidates.size(); ++i)
            pos_weights[i] = static_cast<double>(pos_candidates[i].count);
        std::vector<BeliefKey> positives;
        for (size_t idx :
             detail::weighted_sample_without_replacement(rng, pos_weights, config.max_pos))
            positives.push_back(pos_candidates[idx].key);

        std::vector<BeliefKey> negatives;
        if (config.force_opposite && opp_votes > 0) {
            negatives.push_back(opp);
            std::vector<double> neg_weights(opp_neighbors.size());
            for (size_t i = 0; i < opp_neighbors.size(); ++i)
                neg_weights[i] = static_cast<double>(opp_neighbors[i].count);
            for (size_t idx : detail::weighted_sample_without_replacement(
                     rng, neg_weights, config.max_neg - 1))
                negatives.push_back(opp_neighbors[idx].key);
        } else {
            // Pool: co-occurrers of the opposite, plus the opposite itself
            // (weight = its vote count) when it has vote evidence.
            std::vector<BeliefKey> pool;
            std::vector<double> neg_weights;
            for (const auto& nb : opp_neighbors) {
                pool.push_back(nb.key);
                neg_weights.push_back(static_cast<double>(nb.count));
            }
            if (opp_votes > 0) {
                pool.push_back(opp);
                neg_weights.push_back(static_cast<double>(opp_votes));
            }
            for (size_t idx :
                 detail::weighted_sample_without_replacement(rng, neg_weights, config.max_neg))
                negatives.push_back(pool[idx]);
        }

        if (negatives.empty()) {
            ++local.skipped_no_negative;
            continue;
        }

        ++local.anchors_emitted;
        for (const BeliefKey p : positives)
            for (const BeliefKey n : negatives)
                if (p != n) out.push_back(Triplet{anchor, p, n});
    }

    if (report) *report = local;
    return out;
}

TripletStats triplet_stats(const std::vector<Triplet>& triplets, const Corpus& corpus) {
    TripletStats stats;
    stats.n_triplets = triplets.size();
    std::map<uint64_t, size_t> per_anchor;
    size_t opposite_negatives = 0;
    for (const auto& t : triplets) {
        ++per_anchor[t.anchor.packed()];
        if (t.negative == opposite(t.anchor)) ++opposite_negatives;
        const auto& cat = corpus.debates()[t.anchor.debate].category;
        ++stats.per_category[cat ? *cat : std::string()];
    }
    stats.n_anchors = per_anchor.size();
    for (const auto& [k, c] : per_anchor) stats.max_per_anchor = std::max(stats.max_per_anchor, c);
    if (stats.n_anchors > 0)
        stats.mean_per_anchor =
            static_cast<double>(stats.n_triplets) / static_cast<double>(stats.n_anchors);
    if (stats.n_triplets > 0)
        stats.direct_opposite_fraction =
            static_cast<double>(opposite_negatives) / static_cast<double>(stats.n_triplets);
    return stats;
}

void write_triplets_csv(const std::vector<Triplet>& triplets, const Corpus& corpus,
                        const std::filesystem::path& path) {
    CsvWriter out(path);
    out.raw_line("anchor_debate,anchor_pol,pos_debate,pos_pol,neg_debate,neg_pol");
    for (const auto& t : triplets) {
        out.row({corpus.debates()[t.anchor.debate].id, std::string(to_string(t.anchor.pol)),
                 corpus.debates()[t.positive.debate].id, std::string(to_string(t.positive.pol)),
                 corpus.debates()[t.negative.debate].id, std::string(to_string(t.negative.pol))});
    }
    out.close();
}

std::vector<Triplet> read_triplets_csv(const Corpus& corpus, const std::filesystem::path& path) {
    CsvReader reader(path);
    std::vector<std::string> fields;
    size_t line_no = 0;
    if (!reader.next(fields, line_no) ||
        fields != std::vector<std::string>{"anchor_debate", "anchor_pol", "pos_debate", "pos_pol",
                                           "neg_debate", "neg_pol"})
        throw DataError(reader.filename() + ": bad or missing triplet CSV header");
    std::vector<Triplet> out;
    auto key_of = [&](const std::string& id, const std::string& pol, size_t line) {
        const auto d = corpus.find_debate(id);
        if (!d)
            throw DataError(reader.filename() + ":" + std::to_string(line) +
                            ": unknown debate_id '" + id + "'");
        return BeliefKey{*d, polarity_from_string(pol)};
    };
    while (reader.next(fields, line_no)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != 6)
            throw DataError(reader.filename() + ":" + std::to_string(line_no) +
                            ": expected 6 fields");
        out.push_back(Triplet{key_of(fields[0], fields[1], line_no),
                              key_of(fields[2], fields[3], line_no),
                              key_of(fields[4], fields[5], line_no)});
    }
    return out;
}

} // namespace beliefspace
