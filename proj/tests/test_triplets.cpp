#include <doctest.h>

#include <map>
#include <set>

#include "beliefspace/triplets.hpp"
#include "tmpdir.hpp"

using namespace beliefspace;

namespace {

Corpus fixture_corpus(uint32_t n_debates,
                      const std::vector<std::tuple<std::string, uint32_t, Polarity>>& votes) {
    std::vector<Debate> debates;
    for (uint32_t d = 0; d < n_debates; ++d)
        debates.push_back(Debate{"d" + std::to_string(d), "Topic " + std::to_string(d),
                                 d % 2 ? std::optional<std::string>("even") : std::nullopt});
    std::vector<std::pair<std::string, std::pair<std::string, Polarity>>> raw;
    for (const auto& [user, debate, pol] : votes)
        raw.emplace_back(user, std::make_pair("d" + std::to_string(debate), pol));
    return Corpus(std::move(debates), std::move(raw), IngestReport{});
}

BeliefKey key(uint32_t d, Polarity p) { return BeliefKey{d, p}; }

} // namespace

TEST_CASE("cooc counts users holding both beliefs (2-user fixture, brute force)") {
    const Corpus corpus = fixture_corpus(2, {{"u1", 0, Polarity::Pro},
                                             {"u1", 1, Polarity::Pro},
                                             {"u2", 0, Polarity::Pro},
                                             {"u2", 1, Polarity::Pro}});
    const auto cooc = build_cooc(corpus);

    // Brute force over the fixture: for every unordered key pair, count users
    // holding both.
    std::map<std::string, std::set<uint64_t>> holders;
    for (uint32_t u = 0; u < corpus.users().size(); ++u)
        for (const auto& v : corpus.votes_of(u))
            holders[corpus.users()[u]].insert(BeliefKey{v.debate, v.pol}.packed());
    auto brute = [&](BeliefKey a, BeliefKey b) {
        uint32_t n = 0;
        for (const auto& [user, keys] : holders)
            if (keys.count(a.packed()) && keys.count(b.packed())) ++n;
        return n;
    };

    const BeliefKey a = key(0, Polarity::Pro), b = key(1, Polarity::Pro);
    CHECK(cooc.count(a, b) == 2);
    CHECK(cooc.count(a, b) == brute(a, b));
    CHECK(cooc.count(b, a) == cooc.count(a, b)); // symmetry
    CHECK(cooc.votes(a) == 2);
}

TEST_CASE("a single-vote user contributes no pairs") {
    const Corpus corpus = fixture_corpus(2, {{"solo", 0, Polarity::Pro}});
    const auto cooc = build_cooc(corpus);
    CHECK(cooc.pair_entries() == 0);
    CHECK(cooc.votes(key(0, Polarity::Pro)) == 1);
}

TEST_CASE("a belief never co-occurs with its own opposite") {
    const Corpus corpus = fixture_corpus(3, {{"u1", 0, Polarity::Pro},
                                             {"u1", 1, Polarity::Con},
                                             {"u2", 0, Polarity::Con},
                                             {"u2", 1, Polarity::Con},
                                             {"u3", 0, Polarity::Pro},
                                             {"u3", 2, Polarity::Pro}});
    const auto cooc = build_cooc(corpus);
    for (uint32_t d = 0; d < 3; ++d)
        CHECK(cooc.count(key(d, Polarity::Pro), key(d, Polarity::Con)) == 0);
}

TEST_CASE("debate filter restricts co-occurrence to masked debates") {
    const Corpus corpus = fixture_corpus(3, {{"u1", 0, Polarity::Pro},
                                             {"u1", 1, Polarity::Pro},
                                             {"u1", 2, Polarity::Pro}});
    std::vector<uint8_t> mask{1, 1, 0};
    const auto cooc = build_cooc(corpus, &mask);
    CHECK(cooc.count(key(0, Polarity::Pro), key(1, Polarity::Pro)) == 1);
    CHECK(cooc.count(key(0, Polarity::Pro), key(2, Polarity::Pro)) == 0);
    CHECK(cooc.votes(key(2, Polarity::Pro)) == 0);
}

TEST_CASE("sampler on the 3-debate fixture only emits hand-enumerated candidates") {
    // Anchor (d0,PRO) co-occurs only with (d1,PRO); opposite (d0,CON) has
    // votes and co-occurs with (d2,CON).
    const Corpus corpus = fixture_corpus(3, {{"u1", 0, Polarity::Pro},
                                             {"u1", 1, Polarity::Pro},
                                             {"u2", 0, Polarity::Con},
                                             {"u2", 2, Polarity::Con}});
    const auto cooc = build_cooc(corpus);
    TripletSamplerConfig config;
    config.seed = 17;
    const auto triplets = sample_triplets(cooc, corpus, config);

    const BeliefKey anchor = key(0, Polarity::Pro);
    bool saw_anchor = false;
    for (const auto& t : triplets) {
        if (t.anchor != anchor) continue;
        saw_anchor = true;
        CHECK(t.positive == key(1, Polarity::Pro));
        const bool neg_ok = t.negative == key(0, Polarity::Con) ||
                            t.negative == key(2, Polarity::Con);
        CHECK(neg_ok);
    }
    CHECK(saw_anchor);
}

TEST_CASE("anchor with 5 positives and 5 negatives emits exactly 25 triplets") {
    // Anchor (d0,PRO): u_pos votes d0..d5 PRO (5 co-occurring positives).
    // Opposite (d0,CON): u_neg votes d0 CON plus d6..d9 CON, so negatives are
    // the opposite + 4 co-occurrers, disjoint from the positives.
    std::vector<std::tuple<std::string, uint32_t, Polarity>> votes;
    for (uint32_t d = 0; d <= 5; ++d) votes.emplace_back("u_pos", d, Polarity::Pro);
    votes.emplace_back("u_neg", 0, Polarity::Con);
    for (uint32_t d = 6; d <= 9; ++d) votes.emplace_back("u_neg", d, Polarity::Con);
    const Corpus corpus = fixture_corpus(10, votes);
    const auto cooc = build_cooc(corpus);
    TripletSamplerConfig config;
    config.seed = 3;
    const auto triplets = sample_triplets(cooc, corpus, config);

    size_t for_anchor = 0;
    std::set<uint64_t> pos_seen, neg_seen;
    for (const auto& t : triplets) {
        if (t.anchor != key(0, Polarity::Pro)) continue;
        ++for_anchor;
        pos_seen.insert(t.positive.packed());
        neg_seen.insert(t.negative.packed());
    }
    CHECK(for_anchor == 25);
    CHECK(pos_seen.size() == 5);
    CHECK(neg_seen.size() == 5);
    CHECK(neg_seen.count(key(0, Polarity::Con).packed()) == 1); // forced opposite
}

TEST_CASE("sampling is deterministic in the seed") {
    const auto synth = generate_synthetic(40, 20, 2, 0.9, 0.0, 5);
    const auto cooc = build_cooc(synth.corpus);
    TripletSamplerConfig config;
    config.seed = 101;
    const auto a = sample_triplets(cooc, synth.corpus, config);
    const auto b = sample_triplets(cooc, synth.corpus, config);
    CHECK(a == b);
    config.seed = 102;
    const auto c = sample_triplets(cooc, synth.corpus, config);
    CHECK(a != c);
}

TEST_CASE("emitted triplets satisfy the type invariants (random corpora)") {
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
        const auto synth = generate_synthetic(30, 15, 3, 0.8, 0.1, seed);
        const auto cooc = build_cooc(synth.corpus);
        TripletSamplerConfig config;
        config.seed = seed * 7 + 1;
        SamplerReport report;
        const auto triplets = sample_triplets(cooc, synth.corpus, config, &report);
        CHECK(report.anchors_total > 0);
        for (const auto& t : triplets) {
            CHECK(t.positive != t.anchor);
            CHECK(t.negative != t.positive);
            CHECK(t.negative != t.anchor);
            // positive co-occurs with the anchor
            CHECK(cooc.count(t.anchor, t.positive) > 0);
            // negative is the opposite or co-occurs with the opposite
            const bool valid_neg = t.negative == opposite(t.anchor) ||
                                   cooc.count(opposite(t.anchor), t.negative) > 0;
            CHECK(valid_neg);
        }
    }
}

TEST_CASE("weighted sampling matches draw-order enumeration on 3 candidates") {
    // Weights {1,2,3}, two draws without replacement. P(candidate selected) =
    // P(first) + sum over others P(other first) * P(candidate second).
    const std::vector<double> w{1.0, 2.0, 3.0};
    const double W = 6.0;
    std::vector<double> expected(3, 0.0);
    for (size_t i = 0; i < 3; ++i) {
        expected[i] += w[i] / W;
        for (size_t j = 0; j < 3; ++j)
            if (j != i) expected[i] += (w[j] / W) * (w[i] / (W - w[j]));
    }

    const int trials = 40000;
    std::vector<int> hits(3, 0);
    for (int t = 0; t < trials; ++t) {
        Rng rng(static_cast<uint64_t>(t) + 1);
        for (size_t idx : detail::weighted_sample_without_replacement(rng, w, 2)) ++hits[idx];
    }
    for (size_t i = 0; i < 3; ++i) {
        const double hat = static_cast<double>(hits[i]) / trials;
        const double sigma = std::sqrt(expected[i] * (1 - expected[i]) / trials);
        CHECK(std::fabs(hat - expected[i]) < 4.0 * sigma);
    }
}

TEST_CASE("no test debate ever appears in train-fold triplets (leak check)") {
    const auto synth = generate_synthetic(50, 25, 2, 0.9, 0.05, 8);
    const auto folds = make_folds(synth.corpus, 5, 8);
    for (const auto& fold : folds) {
        std::vector<uint8_t> train_mask(synth.corpus.debates().size(), 1);
        for (uint32_t d : fold.test_debates) train_mask[d] = 0;
        const auto cooc = build_cooc(synth.corpus, &train_mask);
        TripletSamplerConfig config;
        config.seed = 99;
        const auto triplets = sample_triplets(cooc, synth.corpus, config);
        CHECK(!triplets.empty());
        for (const auto& t : triplets) {
            CHECK(!fold.is_test(t.anchor.debate));
            CHECK(!fold.is_test(t.positive.debate));
            CHECK(!fold.is_test(t.negative.debate));
        }
    }
}

TEST_CASE("triplet_stats on an empty list is all zero") {
    const Corpus corpus = fixture_corpus(1, {});
    const auto stats = triplet_stats({}, corpus);
    CHECK(stats.n_triplets == 0);
    CHECK(stats.n_anchors == 0);
    CHECK(stats.direct_opposite_fraction == 0.0);
}

TEST_CASE("triplet_stats counts anchors and totals") {
    const Corpus corpus = fixture_corpus(4, {});
    std::vector<Triplet> triplets;
    for (int i = 0; i < 25; ++i)
        triplets.push_back(Triplet{key(0, Polarity::Pro), key(1, Polarity::Pro),
                                   key(2, Polarity::Con)});
    const auto stats = triplet_stats(triplets, corpus);
    CHECK(stats.n_anchors == 1);
    CHECK(stats.n_triplets == 25);
    CHECK(stats.mean_per_anchor == doctest::Approx(25.0));
}

TEST_CASE("forced direct-opposite fixture has opposite fraction 1.0") {
    const Corpus corpus = fixture_corpus(4, {});
    std::vector<Triplet> triplets;
    for (uint32_t d = 0; d < 4; ++d)
        triplets.push_back(Triplet{key(d, Polarity::Pro), key((d + 1) % 4, Polarity::Pro),
                                   key(d, Polarity::Con)});
    const auto stats = triplet_stats(triplets, corpus);
    CHECK(stats.direct_opposite_fraction == doctest::Approx(1.0));
}

TEST_CASE("triplet CSV round-trips through the pinned header") {
    const auto synth = generate_synthetic(20, 10, 2, 0.9, 0.0, 12);
    const auto cooc = build_cooc(synth.corpus);
    TripletSamplerConfig config;
    config.seed = 6;
    const auto triplets = sample_triplets(cooc, synth.corpus, config);
    REQUIRE(!triplets.empty());

    TmpDir tmp("tripcsv");
    write_triplets_csv(triplets, synth.corpus, tmp.path / "t.csv");
    const std::string contents = slurp(tmp.path / "t.csv");
    CHECK(contents.rfind("anchor_debate,anchor_pol,pos_debate,pos_pol,neg_debate,neg_pol\n", 0) ==
          0);
    const auto back = read_triplets_csv(synth.corpus, tmp.path / "t.csv");
    CHECK(back == triplets);
}
