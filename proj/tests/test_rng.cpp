#include <doctest.h>

#include <map>

#include "beliefspace/rng.hpp"

using namespace beliefspace;

TEST_CASE("same seed gives the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("substreams with different labels diverge") {
    Rng a = substream(7, "alpha");
    Rng b = substream(7, "beta");
    bool differ = false;
    for (int i = 0; i < 8 && !differ; ++i) differ = a.next_u64() != b.next_u64();
    CHECK(differ);
}

TEST_CASE("uniform_u64 stays in range and covers all values") {
    Rng rng(3);
    std::map<uint64_t, int> seen;
    for (int i = 0; i < 3000; ++i) {
        const uint64_t v = rng.uniform_u64(7);
        REQUIRE(v < 7);
        ++seen[v];
    }
    CHECK(seen.size() == 7);
    for (const auto& [v, c] : seen) CHECK(c > 300); // expectation ~429
}

TEST_CASE("uniform_real lies in [0,1) with sane mean") {
    Rng rng(11);
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double x = rng.uniform_real();
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
        sum += x;
    }
    CHECK(sum / 20000.0 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("gaussian has roughly standard moments") {
    Rng rng(13);
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = rng.gaussian();
        sum += x;
        sq += x * x;
    }
    CHECK(sum / n == doctest::Approx(0.0).epsilon(0.05));
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("shuffle is a permutation and seed-stable") {
    std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<int> w = v;
    Rng a(5), b(5);
    a.shuffle(v);
    b.shuffle(w);
    CHECK(v == w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
}
