#include <gtest/gtest.h>

#include <random>

#include "qvqpp/rank_sim.hpp"
#include "test_support.hpp"

namespace qvqpp {
namespace {

using Ids = std::vector<std::string>;

TEST(Rbo, IdenticalListsScoreOne) {
    Ids a{"x", "y", "z"};
    EXPECT_NEAR(rbo_ext(a, a), 1.0, 1e-12);
    Ids one{"x"};
    EXPECT_NEAR(rbo_ext(one, one), 1.0, 1e-12);
}

TEST(Rbo, DisjointListsScoreZero) {
    Ids a{"a", "b", "c"};
    Ids b{"d", "e"};
    EXPECT_EQ(rbo_ext(a, b), 0.0);
}

TEST(Rbo, SwappedPair) {
    // RBO_EXT at depth 2: (1-p)/p * (0/1 * p + 2/2 * p^2) + 1 * p^2 = (1-p)p + p^2 = p
    Ids a{"x", "y"};
    Ids b{"y", "x"};
    EXPECT_NEAR(rbo_ext(a, b, {0.9, 100}), 0.9, 1e-9);
}

TEST(Rbo, EmptyList) {
    Ids a{"x"};
    Ids empty;
    EXPECT_EQ(rbo_ext(a, empty), 0.0);
    EXPECT_EQ(rbo_ext(empty, empty), 0.0);
}

TEST(Rbo, UnevenLengthsUseExtrapolation) {
    Ids a{"a", "b", "c", "d"};
    Ids b{"a", "c"};
    EXPECT_NEAR(rbo_ext(a, b), testing::naive_rbo(a, b, 0.9), 1e-12);
    // a prefix of the longer list agrees with it completely
    Ids prefix{"a", "b"};
    EXPECT_NEAR(rbo_ext(a, prefix), 1.0, 1e-12);
}

TEST(Rbo, EvalDepthTruncates) {
    Ids a{"a", "b", "c"};
    Ids b{"a", "b", "d"};
    EXPECT_NEAR(rbo_ext(a, b, {0.9, 2}), 1.0, 1e-12);
}

TEST(Rbo, Errors) {
    Ids dup{"a", "a"};
    Ids b{"a"};
    EXPECT_THROW(rbo_ext(dup, b), Error);
    EXPECT_THROW(rbo_ext(b, b, {0.0, 10}), Error);
    EXPECT_THROW(rbo_ext(b, b, {1.0, 10}), Error);
    EXPECT_THROW(rbo_ext(b, b, {0.9, 0}), Error);
}

TEST(Rbo, RankedListOverloadIgnoresScores) {
    RankedList a{"q", {{"x", 5.0}, {"y", 1.0}}};
    RankedList b{"q", {{"y", 100.0}, {"x", -3.0}}};
    EXPECT_NEAR(rbo_ext(a, b), 0.9, 1e-9);
}

Ids random_list(std::mt19937& rng, std::size_t universe, std::size_t max_len) {
    Ids all;
    for (std::size_t i = 0; i < universe; ++i) all.push_back("d" + std::to_string(i));
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(std::uniform_int_distribution<std::size_t>(0, std::min(max_len, universe))(rng));
    return all;
}

// 1000 random pairs: matches the naive oracle, is symmetric and bounded.
TEST(Rbo, RandomPairsProperty) {
    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> pdist(0.05, 0.99);
    for (int trial = 0; trial < 1000; ++trial) {
        auto a = random_list(rng, 40, 30);
        auto b = random_list(rng, 40, 30);
        RboParams params{pdist(rng), 1 + static_cast<std::size_t>(rng() % 40)};
        double ab = rbo_ext(a, b, params);
        double ba = rbo_ext(b, a, params);
        ASSERT_NEAR(ab, ba, 1e-12);
        ASSERT_GE(ab, 0.0);
        ASSERT_LE(ab, 1.0);
        ASSERT_NEAR(ab, testing::naive_rbo(a, b, params.p, params.eval_depth), 1e-9) << "trial " << trial;
    }
}

}  // namespace
}  // namespace qvqpp
