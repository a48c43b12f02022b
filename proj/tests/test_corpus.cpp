#include <doctest.h>

#include <set>

#include "beliefspace/corpus.hpp"
#include "beliefspace/rng.hpp"
#include "tmpdir.hpp"

using namespace beliefspace;

namespace {

const char* kDebatesTwo =
    R"({"debate_id": "A", "title": "God exists", "category": "religion"})"
    "\n"
    R"({"debate_id": "B", "title": "Cats are better than dogs", "category": null})"
    "\n";

} // namespace

TEST_CASE("render_statement matches the fixed templates") {
    CHECK(render_statement("Abortion is morally justified", Polarity::Pro) ==
          "I agree with the following: Abortion is morally justified");
    CHECK(render_statement("Abortion is morally justified", Polarity::Con) ==
          "I disagree with the following: Abortion is morally justified");
}

TEST_CASE("render_statement rejects empty and whitespace titles") {
    CHECK_THROWS_AS(render_statement("", Polarity::Pro), DataError);
    CHECK_THROWS_AS(render_statement("   \t ", Polarity::Con), DataError);
}

TEST_CASE("render_statement is injective over (title, polarity)") {
    Rng rng(99);
    std::set<std::string> seen;
    std::vector<std::pair<std::string, Polarity>> inputs;
    for (int i = 0; i < 200; ++i) {
        std::string title = "topic " + std::to_string(rng.uniform_u64(100));
        const Polarity pol = rng.uniform_u64(2) ? Polarity::Con : Polarity::Pro;
        inputs.emplace_back(title, pol);
    }
    std::set<std::pair<std::string, Polarity>> distinct(inputs.begin(), inputs.end());
    for (const auto& [title, pol] : distinct) seen.insert(render_statement(title, pol));
    CHECK(seen.size() == distinct.size());
}

TEST_CASE("opposite is an involution on belief keys") {
    for (uint32_t d = 0; d < 50; ++d) {
        for (Polarity pol : {Polarity::Pro, Polarity::Con}) {
            const BeliefKey k{d, pol};
            CHECK(opposite(opposite(k)) == k);
            CHECK(opposite(k).debate == k.debate);
            CHECK(opposite(k).pol != k.pol);
        }
    }
}

TEST_CASE("load_corpus applies the exclusion filter by membership") {
    TmpDir tmp("excl");
    const auto debates = tmp.file("debates.jsonl", kDebatesTwo);
    const auto votes = tmp.file("votes.csv",
                                "user_id,debate_id,polarity\n"
                                "u1,A,PRO\n"
                                "u2,B,CON\n");
    const auto excl = tmp.file("exclude.txt", "# comment\nB\n");
    const Corpus corpus = load_corpus(debates, votes, excl);
    CHECK(corpus.debates().size() == 1);
    CHECK(corpus.debates()[0].id == "A");
    CHECK(corpus.votes().size() == 1);
    CHECK(corpus.report().debates_excluded == 1);
    CHECK(corpus.report().votes_on_excluded == 1);
    CHECK(corpus.report().unique_users == 1);
}

TEST_CASE("TIE rows are dropped at ingest") {
    TmpDir tmp("tie");
    const auto debates = tmp.file("debates.jsonl", kDebatesTwo);
    const auto votes = tmp.file("votes.csv",
                                "user_id,debate_id,polarity\n"
                                "u1,A,PRO\n"
                                "u1,B,TIE\n");
    const Corpus corpus = load_corpus(debates, votes);
    CHECK(corpus.votes().size() == 1);
    CHECK(corpus.report().ties_dropped == 1);
    for (const auto& v : corpus.votes()) CHECK(v.pol == Polarity::Pro);
}

TEST_CASE("duplicate (user, debate) votes keep the last occurrence") {
    TmpDir tmp("dup");
    const auto debates = tmp.file("debates.jsonl", kDebatesTwo);
    const auto votes = tmp.file("votes.csv",
                                "user_id,debate_id,polarity\n"
                                "u1,A,PRO\n"
                                "u1,A,CON\n");
    const Corpus corpus = load_corpus(debates, votes);
    REQUIRE(corpus.votes().size() == 1);
    CHECK(corpus.votes()[0].pol == Polarity::Con);
    CHECK(corpus.report().duplicates_replaced == 1);
}

TEST_CASE("malformed rows name file, line and field") {
    TmpDir tmp("mal");
    const auto debates = tmp.file("debates.jsonl",
                                  R"({"debate_id": "A", "title": "ok"})"
                                  "\n"
                                  R"({"debate_id": "B", "title": 42})"
                                  "\n");
    const auto votes = tmp.file("votes.csv", "user_id,debate_id,polarity\n");
    try {
        load_corpus(debates, votes);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("debates.jsonl") != std::string::npos);
        CHECK(msg.find(":2") != std::string::npos);
        CHECK(msg.find("title") != std::string::npos);
    }

    const auto bad_votes = tmp.file("votes2.csv",
                                    "user_id,debate_id,polarity\n"
                                    "u1,A,MAYBE\n");
    const auto good_debates = tmp.file("debates2.jsonl", kDebatesTwo);
    try {
        load_corpus(good_debates, bad_votes);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("votes2.csv") != std::string::npos);
        CHECK(msg.find("polarity") != std::string::npos);
    }
}

TEST_CASE("votes on unknown debates list the offenders") {
    TmpDir tmp("unknown");
    const auto debates = tmp.file("debates.jsonl", kDebatesTwo);
    const auto votes = tmp.file("votes.csv",
                                "user_id,debate_id,polarity\n"
                                "u1,NOPE,PRO\n"
                                "u2,A,CON\n");
    try {
        load_corpus(debates, votes);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("NOPE") != std::string::npos);
    }
}

TEST_CASE("ingest is idempotent: save/load round-trips byte-equal") {
    TmpDir tmp("idem");
    const auto debates = tmp.file("debates.jsonl", kDebatesTwo);
    const auto votes = tmp.file("votes.csv",
                                "user_id,debate_id,polarity\n"
                                "u2,B,CON\n"
                                "u1,A,PRO\n"
                                "u1,B,TIE\n");
    const Corpus first = load_corpus(debates, votes);
    first.save(tmp.path / "one");
    const Corpus second = load_corpus(tmp.path / "one" / "debates.jsonl",
                                      tmp.path / "one" / "votes.csv");
    second.save(tmp.path / "two");
    CHECK(slurp(tmp.path / "one" / "debates.jsonl") == slurp(tmp.path / "two" / "debates.jsonl"));
    CHECK(slurp(tmp.path / "one" / "votes.csv") == slurp(tmp.path / "two" / "votes.csv"));
}

TEST_CASE("titles with commas and quotes survive the votes/debates round trip") {
    TmpDir tmp("quote");
    const auto debates = tmp.file(
        "debates.jsonl",
        R"({"debate_id": "q,1", "title": "Taxes, \"fair\" or not, are needed", "category": null})"
        "\n");
    const auto votes = tmp.file("votes.csv",
                                "user_id,debate_id,polarity\n"
                                "\"u,1\",\"q,1\",PRO\n");
    const Corpus corpus = load_corpus(debates, votes);
    REQUIRE(corpus.votes().size() == 1);
    CHECK(corpus.users()[0] == "u,1");
    corpus.save(tmp.path / "out");
    const Corpus again =
        load_corpus(tmp.path / "out" / "debates.jsonl", tmp.path / "out" / "votes.csv");
    CHECK(again.users()[0] == "u,1");
    CHECK(again.debates()[0].title == "Taxes, \"fair\" or not, are needed");
}

namespace {

Corpus tiny_corpus(uint32_t n_debates, const std::vector<std::tuple<std::string, uint32_t, Polarity>>& votes) {
    std::vector<Debate> debates;
    for (uint32_t d = 0; d < n_debates; ++d)
        debates.push_back(Debate{"d" + std::to_string(d), "Topic " + std::to_string(d), {}});
    std::vector<std::pair<std::string, std::pair<std::string, Polarity>>> raw;
    for (const auto& [user, debate, pol] : votes)
        raw.emplace_back(user, std::make_pair("d" + std::to_string(debate), pol));
    return Corpus(std::move(debates), std::move(raw), IngestReport{});
}

} // namespace

TEST_CASE("make_folds partitions 10 debates into 5 disjoint test pairs") {
    const Corpus corpus = tiny_corpus(10, {{"u", 0, Polarity::Pro}});
    const auto folds = make_folds(corpus, 5, 77);
    REQUIRE(folds.size() == 5);
    std::set<uint32_t> all;
    for (const auto& f : folds) {
        CHECK(f.test_debates.size() == 2);
        CHECK(f.train_debates.size() == 8);
        for (uint32_t d : f.test_debates) {
            CHECK(all.insert(d).second); // disjoint
            CHECK(f.is_test(d));
        }
        for (uint32_t d : f.train_debates) CHECK(!f.is_test(d));
    }
    CHECK(all.size() == 10);
}

TEST_CASE("make_folds is deterministic in the seed") {
    const Corpus corpus = tiny_corpus(23, {{"u", 0, Polarity::Pro}});
    const auto a = make_folds(corpus, 4, 123);
    const auto b = make_folds(corpus, 4, 123);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].test_debates == b[i].test_debates);
    const auto c = make_folds(corpus, 4, 124);
    bool any_diff = false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i].test_debates != c[i].test_debates) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("every debate appears in exactly one test fold (brute-force count)") {
    const Corpus corpus = tiny_corpus(100, {{"u", 0, Polarity::Pro}});
    for (uint64_t seed : {1ull, 42ull, 999ull}) {
        const auto folds = make_folds(corpus, 5, seed);
        std::vector<int> count(100, 0);
        for (const auto& f : folds)
            for (uint32_t d : f.test_debates) ++count[d];
        for (uint32_t d = 0; d < 100; ++d) CHECK(count[d] == 1);
    }
}

TEST_CASE("make_folds rejects k > debates and k < 2") {
    const Corpus corpus = tiny_corpus(3, {{"u", 0, Polarity::Pro}});
    CHECK_THROWS_AS(make_folds(corpus, 4, 1), DataError);
    CHECK_THROWS_AS(make_folds(corpus, 1, 1), DataError);
}

TEST_CASE("evaluable users need a vote on both sides of the split") {
    // u_both votes on all debates; u_single votes on one debate only.
    std::vector<std::tuple<std::string, uint32_t, Polarity>> votes;
    for (uint32_t d = 0; d < 6; ++d) votes.emplace_back("u_both", d, Polarity::Pro);
    votes.emplace_back("u_single", 0, Polarity::Con);
    const Corpus corpus = tiny_corpus(6, votes);
    const auto folds = make_folds(corpus, 3, 5);
    const uint32_t u_both = *corpus.find_user("u_both");
    const uint32_t u_single = *corpus.find_user("u_single");
    for (const auto& f : folds) {
        std::set<uint32_t> ev(f.evaluable_users.begin(), f.evaluable_users.end());
        CHECK(ev.count(u_both) == 1);
        // u_single is evaluable in no fold: it always misses one side.
        CHECK(ev.count(u_single) == 0);
        for (uint32_t u : f.evaluable_users) CHECK(u < corpus.users().size());
    }
}

TEST_CASE("synthetic corpus with p=1, eta=0 follows planted labels exactly") {
    const auto synth = generate_synthetic(20, 12, 2, 1.0, 0.0, 9);
    for (const auto& v : synth.corpus.votes()) {
        const uint32_t c = synth.labels.user_community[v.user];
        CHECK(v.pol == synth.labels.planted[c][v.debate]);
    }
    CHECK(synth.corpus.votes().size() == 20 * 12);
}

TEST_CASE("synthetic corpus agreement tracks p") {
    const double p = 0.9;
    const auto synth = generate_synthetic(100, 50, 2, p, 0.0, 31);
    size_t agree = 0;
    for (const auto& v : synth.corpus.votes()) {
        const uint32_t c = synth.labels.user_community[v.user];
        if (v.pol == synth.labels.planted[c][v.debate]) ++agree;
    }
    const double n = static_cast<double>(synth.corpus.votes().size());
    const double hat = static_cast<double>(agree) / n;
    const double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::fabs(hat - p) < 4.0 * sigma);
}

TEST_CASE("synthetic generator validates probability ranges") {
    CHECK_THROWS_AS(generate_synthetic(10, 10, 2, 0.4, 0.0, 1), DataError);
    CHECK_THROWS_AS(generate_synthetic(10, 10, 2, 1.1, 0.0, 1), DataError);
    CHECK_THROWS_AS(generate_synthetic(10, 10, 2, 0.9, 0.5, 1), DataError);
    CHECK_THROWS_AS(generate_synthetic(10, 10, 2, 0.9, -0.1, 1), DataError);
}

TEST_CASE("synthetic profiles carry community party and planted issues") {
    const auto synth = generate_synthetic(10, 15, 2, 1.0, 0.0, 4);
    const UserProfile* p0 = synth.profiles.find("synth_u0");
    const UserProfile* p1 = synth.profiles.find("synth_u1");
    REQUIRE(p0 != nullptr);
    REQUIRE(p1 != nullptr);
    CHECK(*p0->party == "party_0");
    CHECK(*p1->party == "party_1");
    CHECK(p0->big_issues.size() == 10);
}
