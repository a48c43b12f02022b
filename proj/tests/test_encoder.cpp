#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "beliefspace/encoder.hpp"
#include "beliefspace/rng.hpp"
#include "tmpdir.hpp"

using namespace beliefspace;

namespace {

uint32_t ngram_bucket(const std::string& ngram, const FeatureSpec& spec) {
    return static_cast<uint32_t>(fnv1a(ngram, fnv1a_u64(spec.hash_seed)) % spec.buckets);
}

Corpus statement_corpus(uint32_t n_debates,
                        const std::vector<std::tuple<std::string, uint32_t, Polarity>>& votes) {
    std::vector<Debate> debates;
    for (uint32_t d = 0; d < n_debates; ++d)
        debates.push_back(Debate{"d" + std::to_string(d),
                                 "Topic tk" + std::to_string(d) + " matters", std::nullopt});
    std::vector<std::pair<std::string, std::pair<std::string, Polarity>>> raw;
    for (const auto& [user, debate, pol] : votes)
        raw.emplace_back(user, std::make_pair("d" + std::to_string(debate), pol));
    return Corpus(std::move(debates), std::move(raw), IngestReport{});
}

} // namespace

TEST_CASE("featurize is pure") {
    FeatureSpec spec;
    const auto a = featurize("I agree with the following: God exists", spec);
    const auto b = featurize("I agree with the following: God exists", spec);
    CHECK(a.entries == b.entries);
}

TEST_CASE("agree/disagree statements differ exactly in the template n-gram buckets") {
    FeatureSpec spec;
    const auto pro = featurize("I agree with the following: X", spec);
    const auto con = featurize("I disagree with the following: X", spec);

    // Hand-enumerated n-gram difference between the two statements.
    const std::set<uint32_t> expect_pro{ngram_bucket("agree", spec),
                                        ngram_bucket("i\x1f" "agree", spec),
                                        ngram_bucket("agree\x1fwith", spec)};
    const std::set<uint32_t> expect_con{ngram_bucket("disagree", spec),
                                        ngram_bucket("i\x1f" "disagree", spec),
                                        ngram_bucket("disagree\x1fwith", spec)};
    // The shared n-grams must not collide with the differing ones for the
    // symmetric-difference argument to be exact; verify on this fixture.
    std::set<uint32_t> shared;
    for (const auto& t : {"i", "with", "the", "following", "x", "with\x1fthe", "the\x1f"
                          "following", "following\x1fx"})
        shared.insert(ngram_bucket(t, spec));
    for (uint32_t bkt : expect_pro) REQUIRE(!shared.count(bkt));
    for (uint32_t bkt : expect_con) REQUIRE(!shared.count(bkt));

    std::set<uint32_t> pro_idx, con_idx;
    for (const auto& [i, v] : pro.entries) pro_idx.insert(i);
    for (const auto& [i, v] : con.entries) con_idx.insert(i);
    std::set<uint32_t> only_pro, only_con;
    for (uint32_t i : pro_idx)
        if (!con_idx.count(i)) only_pro.insert(i);
    for (uint32_t i : con_idx)
        if (!pro_idx.count(i)) only_con.insert(i);
    CHECK(only_pro == expect_pro);
    CHECK(only_con == expect_con);
}

TEST_CASE("repeated token text hashes to unigram+bigram buckets with unit norm") {
    FeatureSpec spec;
    const auto f = featurize("a a a a", spec);
    // 4 unigrams "a", 3 bigrams "a a".
    REQUIRE(f.entries.size() == 2);
    double norm_sq = 0.0;
    std::map<uint32_t, double> by_idx(f.entries.begin(), f.entries.end());
    const double u = by_idx.at(ngram_bucket("a", spec));
    const double b = by_idx.at(ngram_bucket("a\x1f" "a", spec));
    CHECK(u == doctest::Approx(4.0 / 5.0)); // 4 / sqrt(16+9)
    CHECK(b == doctest::Approx(3.0 / 5.0));
    for (const auto& [i, v] : f.entries) norm_sq += v * v;
    CHECK(norm_sq == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("featurize rejects empty and token-free text") {
    FeatureSpec spec;
    CHECK_THROWS_AS(featurize("", spec), DataError);
    CHECK_THROWS_AS(featurize("!!! ---", spec), DataError);
}

TEST_CASE("triplet_loss reproduces the hinge formula") {
    const std::vector<double> a{0.0}, p{0.0}, n{10.0};
    CHECK(triplet_loss(a, p, n, 5.0) == 0.0); // hinge inactive

    const std::vector<double> p2{3.0}, n2{4.0};
    CHECK(triplet_loss(a, p2, n2, 5.0) == doctest::Approx(4.0)); // 3 - 4 + 5

    // s_p == s_n forces the margin.
    const std::vector<double> same{2.5, -1.0};
    const std::vector<double> anchor{0.0, 0.0};
    CHECK(triplet_loss(anchor, same, same, 5.0) == doctest::Approx(5.0));
}

TEST_CASE("triplet_loss rejects dimension mismatches") {
    const std::vector<double> a{0.0, 1.0}, p{0.0}, n{1.0};
    CHECK_THROWS_AS(triplet_loss(a, p, n, 5.0), DataError);
}

TEST_CASE("triplet_loss is non-negative and zero exactly when the gap covers the margin") {
    Rng rng(21);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> a(4), p(4), n(4);
        for (int j = 0; j < 4; ++j) {
            a[j] = rng.gaussian() * 3;
            p[j] = rng.gaussian() * 3;
            n[j] = rng.gaussian() * 3;
        }
        const double eps = 0.5 + rng.uniform_real();
        const double loss = triplet_loss(a, p, n, eps);
        CHECK(loss >= 0.0);
        double dap = 0, dan = 0;
        for (int j = 0; j < 4; ++j) {
            dap += (a[j] - p[j]) * (a[j] - p[j]);
            dan += (a[j] - n[j]) * (a[j] - n[j]);
        }
        dap = std::sqrt(dap);
        dan = std::sqrt(dan);
        if (dan >= dap + eps) CHECK(loss == 0.0);
        else CHECK(loss > 0.0);
    }
}

TEST_CASE("zero weights encode to the zero vector") {
    FeatureSpec spec;
    spec.buckets = 64;
    EncoderModel model = EncoderModel::trained(spec, 4, std::vector<double>(64 * 4, 0.0));
    const auto v = model.encode("anything at all");
    for (double x : v) CHECK(x == 0.0);
}

TEST_CASE("precomputed store returns vectors exactly and errors on misses") {
    EncoderModel model = EncoderModel::precomputed(
        2, {{"t", {1.5, -2.5}}, {"u", {0.0, 3.0}}});
    CHECK(model.encode("t") == std::vector<double>{1.5, -2.5});
    CHECK_THROWS_AS(model.encode("missing statement"), DataError);
    try {
        model.encode("missing statement");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("missing statement") != std::string::npos);
    }
}

TEST_CASE("encode is linear in the feature vector (superposition)") {
    const uint32_t dim = 6;
    const uint64_t m = 32;
    Rng rng(4);
    std::vector<double> w(m * dim);
    for (auto& x : w) x = rng.gaussian();

    SparseVec f, g, combo;
    f.entries = {{1, 0.5}, {7, -1.0}, {20, 2.0}};
    g.entries = {{1, 1.0}, {9, 0.25}};
    const double alpha = 1.75, beta = -0.5;
    // alpha*f + beta*g merged by index
    combo.entries = {{1, alpha * 0.5 + beta * 1.0},
                     {7, alpha * -1.0},
                     {9, beta * 0.25},
                     {20, alpha * 2.0}};

    const auto ef = detail::encode_features(w, dim, f);
    const auto eg = detail::encode_features(w, dim, g);
    const auto ec = detail::encode_features(w, dim, combo);
    for (uint32_t j = 0; j < dim; ++j)
        CHECK(ec[j] == doctest::Approx(alpha * ef[j] + beta * eg[j]).epsilon(1e-12));
}

namespace {

// d=4, m=16 gradient-check fixture over hand-built sparse features.
struct GradFixture {
    uint32_t dim = 4;
    uint64_t m = 16;
    double margin = 0.5;
    std::vector<SparseVec> feats;
    std::vector<detail::FeatTriplet> triplets;
    std::vector<double> weights;

    explicit GradFixture(uint64_t seed) {
        Rng rng(seed);
        for (int i = 0; i < 9; ++i) {
            SparseVec f;
            std::set<uint32_t> idx;
            while (idx.size() < 3) idx.insert(static_cast<uint32_t>(rng.uniform_u64(m)));
            double norm = 0.0;
            std::vector<double> vals;
            for (size_t k = 0; k < idx.size(); ++k) {
                vals.push_back(0.25 + rng.uniform_real());
                norm += vals.back() * vals.back();
            }
            norm = std::sqrt(norm);
            size_t k = 0;
            for (uint32_t i2 : idx) f.entries.emplace_back(i2, vals[k++] / norm);
            feats.push_back(std::move(f));
        }
        for (uint32_t t = 0; t < 5; ++t)
            triplets.push_back({t, (t + 3) % 9, (t + 6) % 9});
        weights.resize(m * dim);
        for (auto& w : weights) w = rng.gaussian();
    }

    // hinge arguments for kink-distance checks
    std::vector<double> hinge_args() const {
        std::vector<double> args;
        for (const auto& t : triplets) {
            const auto a = detail::encode_features(weights, dim, feats[t.a]);
            const auto p = detail::encode_features(weights, dim, feats[t.p]);
            const auto n = detail::encode_features(weights, dim, feats[t.n]);
            double dap = 0, dan = 0;
            for (uint32_t j = 0; j < dim; ++j) {
                dap += (a[j] - p[j]) * (a[j] - p[j]);
                dan += (a[j] - n[j]) * (a[j] - n[j]);
            }
            args.push_back(std::sqrt(dap) - std::sqrt(dan) + margin);
        }
        return args;
    }
};

} // namespace

TEST_CASE("analytic gradient matches central finite differences away from the kink") {
    GradFixture fx(12);
    const auto args = fx.hinge_args();
    bool any_active = false, any_inactive = false;
    for (double a : args) {
        REQUIRE(std::fabs(a) > 1e-3); // fixture stays away from the kink
        (a > 0 ? any_active : any_inactive) = true;
    }
    CHECK(any_active);
    CHECK(any_inactive);

    std::vector<double> grad;
    detail::mean_loss_gradient(fx.weights, fx.dim, fx.feats, fx.triplets, fx.margin, grad);

    const double h = 1e-5;
    double max_rel = 0.0;
    for (size_t i = 0; i < fx.weights.size(); ++i) {
        auto wp = fx.weights;
        auto wm = fx.weights;
        wp[i] += h;
        wm[i] -= h;
        const double lp = detail::mean_loss(wp, fx.dim, fx.feats, fx.triplets, fx.margin);
        const double lm = detail::mean_loss(wm, fx.dim, fx.feats, fx.triplets, fx.margin);
        const double numeric = (lp - lm) / (2.0 * h);
        const double denom = std::max(std::fabs(grad[i]), std::fabs(numeric));
        if (denom < 1e-10) continue;
        max_rel = std::max(max_rel, std::fabs(grad[i] - numeric) / denom);
    }
    CHECK(max_rel < 1e-4);
}

TEST_CASE("gradient is exactly zero when every hinge is inactive") {
    GradFixture fx(12);
    // A huge negative margin deactivates every hinge.
    std::vector<double> grad;
    detail::mean_loss_gradient(fx.weights, fx.dim, fx.feats, fx.triplets, -100.0, grad);
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("learning_rate=0 leaves weights unchanged and the loss trace flat") {
    const auto synth = generate_synthetic(20, 10, 2, 0.95, 0.0, 2);
    const auto cooc = build_cooc(synth.corpus);
    TripletSamplerConfig sc;
    sc.seed = 5;
    const auto triplets = sample_triplets(cooc, synth.corpus, sc);
    REQUIRE(!triplets.empty());

    TrainConfig config;
    config.dim = 8;
    config.feature_buckets = 256;
    config.learning_rate = 0.0;
    config.epochs = 3;
    config.seed = 7;
    LossTrace trace;
    const auto model = train_encoder(triplets, synth.corpus, config, &trace);

    // Same init, zero epochs worth of movement: reproduce the init weights.
    std::vector<double> init(config.feature_buckets * config.dim);
    Rng rng = substream(config.seed, "init");
    for (auto& w : init) w = 0.1 * rng.gaussian();
    CHECK(model.weights() == init);
    CHECK(trace.initial == trace.final_full);
    for (double e : trace.per_epoch) CHECK(e == doctest::Approx(trace.initial).epsilon(1e-12));
}

TEST_CASE("training is deterministic and reduces the mean loss") {
    const auto synth = generate_synthetic(30, 12, 2, 0.95, 0.0, 3);
    const auto cooc = build_cooc(synth.corpus);
    TripletSamplerConfig sc;
    sc.seed = 11;
    const auto triplets = sample_triplets(cooc, synth.corpus, sc);
    REQUIRE(!triplets.empty());

    TrainConfig config;
    config.dim = 8;
    config.feature_buckets = 512;
    config.epochs = 4;
    config.seed = 13;
    LossTrace t1, t2;
    const auto m1 = train_encoder(triplets, synth.corpus, config, &t1);
    const auto m2 = train_encoder(triplets, synth.corpus, config, &t2);
    CHECK(m1.weights() == m2.weights());
    CHECK(t1.per_epoch == t2.per_epoch);
    CHECK(t1.final_full <= t1.initial);
}

TEST_CASE("non-finite weights abort with a diagnostic") {
    const auto synth = generate_synthetic(20, 10, 2, 0.95, 0.0, 2);
    const auto cooc = build_cooc(synth.corpus);
    TripletSamplerConfig sc;
    sc.seed = 5;
    const auto triplets = sample_triplets(cooc, synth.corpus, sc);
    TrainConfig config;
    config.dim = 8;
    config.feature_buckets = 256;
    config.learning_rate = 1e308; // guaranteed overflow
    config.epochs = 2;
    config.seed = 1;
    CHECK_THROWS_WITH_AS(train_encoder(triplets, synth.corpus, config),
                         doctest::Contains("learning rate"), DataError);
}

TEST_CASE("model save/load round-trips encode outputs on 100 random texts") {
    const auto synth = generate_synthetic(20, 10, 2, 0.9, 0.0, 6);
    const auto cooc = build_cooc(synth.corpus);
    TripletSamplerConfig sc;
    sc.seed = 2;
    const auto triplets = sample_triplets(cooc, synth.corpus, sc);
    TrainConfig config;
    config.dim = 8;
    config.feature_buckets = 512;
    config.epochs = 2;
    config.seed = 19;
    const auto model = train_encoder(triplets, synth.corpus, config);

    TmpDir tmp("model");
    model.save(tmp.path / "m.blfm");
    const auto loaded = EncoderModel::load(tmp.path / "m.blfm");
    CHECK(loaded.weights() == model.weights()); // bit-exact
    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
        const std::string text = "random token" + std::to_string(rng.next_u64() % 1000) +
                                 " and tk" + std::to_string(i);
        CHECK(model.encode(text) == loaded.encode(text));
    }
}

TEST_CASE("truncated and corrupt model files are rejected") {
    FeatureSpec spec;
    spec.buckets = 16;
    EncoderModel model = EncoderModel::trained(spec, 2, std::vector<double>(32, 1.5));
    TmpDir tmp("trunc");
    model.save(tmp.path / "m.blfm");
    const std::string bytes = slurp(tmp.path / "m.blfm");

    tmp.file("cut.blfm", bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(EncoderModel::load(tmp.path / "cut.blfm"), DataError);

    tmp.file("magic.blfm", "XXXX" + bytes.substr(4));
    CHECK_THROWS_AS(EncoderModel::load(tmp.path / "magic.blfm"), DataError);

    std::string wrong_version = bytes;
    wrong_version[4] = 9; // version little-endian low byte
    tmp.file("ver.blfm", wrong_version);
    CHECK_THROWS_AS(EncoderModel::load(tmp.path / "ver.blfm"), DataError);
}

TEST_CASE("precomputed model files round-trip") {
    EncoderModel model = EncoderModel::precomputed(
        3, {{"alpha", {1.0, 2.0, 3.0}}, {"beta", {-1.0, 0.5, 0.0}}});
    TmpDir tmp("premodel");
    model.save(tmp.path / "p.blfm");
    const auto loaded = EncoderModel::load(tmp.path / "p.blfm");
    CHECK(loaded.backend() == EncoderModel::Backend::Precomputed);
    CHECK(loaded.encode("alpha") == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(loaded.encode("beta") == std::vector<double>{-1.0, 0.5, 0.0});
}

TEST_CASE("vector stores load from JSONL and BLFV identically") {
    TmpDir tmp("vec");
    const auto jsonl = tmp.file("v.jsonl",
                                R"({"text": "s one", "vector": [1.0, 2.0]})"
                                "\n"
                                R"({"text": "s two", "vector": [-0.5, 4.0]})"
                                "\n");
    const auto from_json = load_vectors(jsonl);
    REQUIRE(from_json.size() == 2);
    save_vectors_blfv(from_json, 2, tmp.path / "v.blfv");
    const auto from_blfv = load_vectors(tmp.path / "v.blfv");
    CHECK(from_json == from_blfv);

    const auto mixed = tmp.file("bad.jsonl",
                                R"({"text": "s", "vector": [1.0]})"
                                "\n"
                                R"({"text": "t", "vector": [1.0, 2.0]})"
                                "\n");
    CHECK_THROWS_AS(load_vectors(mixed), DataError);
}
