#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace otd;

namespace {

void fill_random(Network& net, std::uint64_t seed, float lo = 0.0f, float hi = 2000.0f) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<float> d(lo, hi);
    for (unsigned s = 0; s < net.stages(); ++s)
        for (std::size_t i = 0; i < net.tuple_count(); ++i)
            for (float& w : net.weights(s, i)) w = d(gen);
}

Board board_of(std::initializer_list<std::uint64_t> tiles) {
    std::array<std::uint64_t, kCells> t{};
    std::copy(tiles.begin(), tiles.end(), t.begin());
    return Board::from_tiles(t);
}

} // namespace

TEST(Search, ChanceDepthZeroIsNetworkValue) {
    Network net(fixtures::small_config());
    fill_random(net, 1);
    Expectimax search(net, {});
    std::mt19937_64 gen(2);
    for (int i = 0; i < 100; ++i) {
        const Board b = fixtures::random_board(gen);
        ASSERT_EQ(search.chance_value(b, 0), static_cast<double>(net.value(b)));
    }
}

TEST(Search, SingleEmptyCellWithTerminalOutcomes) {
    Board b;
    for (int r = 0; r < 4; ++r)
        for (int k = 0; k < 4; ++k) b.set(4 * r + k, (r + k) % 2 ? 4 : 3);
    b.set(0, 0);
    Network net(fixtures::small_config());
    net.init_optimistic(1000.0f);
    Expectimax search(net, {});
    EXPECT_EQ(search.chance_value(b, 1), 0.0);
}

TEST(Search, SpawnProbabilitiesSumToOne) {
    // no outcome can merge, so every max node scores exactly the constant network value
    Network net(fixtures::small_config());
    net.init_optimistic(5000.0f);
    Board b;
    b.set(0, 6);
    Expectimax search(net, {2, 0, false});
    EXPECT_NEAR(search.chance_value(b, 1), 5000.0, 5000.0 * 1e-9);
}

TEST(Search, MatchesNaiveEnumerator) {
    Network net(fixtures::small_config());
    fill_random(net, 3);
    std::mt19937_64 gen(4);
    for (bool tt : {false, true}) {
        Expectimax search(net, SearchConfig{2, tt ? std::size_t{1} << 20 : 0, false});
        for (int i = 0; i < 100; ++i) {
            const Board b = fixtures::random_reachable(gen);
            for (unsigned d = 0; d <= 2; ++d) {
                const double want = fixtures::naive_chance(net, b, d);
                const double got = search.chance_value(b, d);
                ASSERT_NEAR(got, want, 1e-6 * std::max(1.0, std::fabs(want))) << "depth " << d << "\n" << b;
            }
        }
        if (tt) {
            EXPECT_GT(search.tt_hits(), 0u);
        }
    }
}

TEST(Search, MaxValueOneDepthEqualsGreedyScore) {
    Network net(fixtures::small_config());
    fill_random(net, 5);
    Expectimax search(net, SearchConfig{1, 0, false});
    std::mt19937_64 gen(6);
    for (int i = 0; i < 300; ++i) {
        const Board s = fixtures::random_reachable(gen);
        const auto d = select_action(net, s);
        ASSERT_TRUE(d);
        ASSERT_DOUBLE_EQ(search.max_value(s, 1), d->score);
    }
}

TEST(Search, TerminalStateScoresZero) {
    Board b;
    for (int p = 0; p < kCells; ++p) b.set(p, (p / 4 + p % 4) % 2 + 1);
    ASSERT_TRUE(is_terminal(b));
    Network net(fixtures::small_config());
    net.init_optimistic(100.0f);
    Expectimax search(net, {});
    EXPECT_EQ(search.max_value(b, 3), 0.0);
    EXPECT_FALSE(search.choose(b));
    EXPECT_FALSE(search_action(net, b, {}));
}

TEST(Search, TiesGoToFirstActionInOrder) {
    // a lone tile in the middle: all four moves legal, all scoring 0 on a zero network
    Board b;
    b.set(5, 1);
    Network net(fixtures::small_config());
    EXPECT_EQ(search_action(net, b, SearchConfig{1, 0, false}), Action::Up);
    EXPECT_EQ(search_action(net, b, SearchConfig{2, 0, false}), Action::Up);
    Board c;
    c.set(0, 1); // only Right and Down legal
    EXPECT_EQ(search_action(net, c, SearchConfig{1, 0, false}), Action::Right);
}

TEST(Search, OnePlyEqualsGreedy) {
    Network net(fixtures::net_config("4x6"));
    fill_random(net, 7);
    std::mt19937_64 gen(8);
    for (int i = 0; i < 1000; ++i) {
        const Board s = fixtures::random_reachable(gen);
        ASSERT_EQ(search_action(net, s, SearchConfig{1, 0, false}), select_action(net, s)->action);
    }
}

TEST(Search, TranspositionTableIsTransparent) {
    Network net(fixtures::small_config());
    fill_random(net, 9);
    std::mt19937_64 gen(10);
    Expectimax with(net, SearchConfig{3, std::size_t{1} << 22, false});
    Expectimax without(net, SearchConfig{3, 0, false});
    for (int i = 0; i < 100; ++i) {
        const Board s = fixtures::random_reachable(gen, 400);
        const auto a = with.choose(s), b = without.choose(s);
        ASSERT_EQ(a.has_value(), b.has_value());
        if (!a) continue;
        ASSERT_EQ(a->action, b->action);
        ASSERT_NEAR(a->score, b->score, 1e-6 * std::max(1.0, std::fabs(b->score)));
    }
    EXPECT_GT(with.tt_hits(), 0u);
    EXPECT_LT(with.nodes(), without.nodes());
}

TEST(Search, TinyTableStillExact) {
    // heavy replacement pressure must not change values
    Network net(fixtures::small_config());
    fill_random(net, 11);
    Expectimax tiny(net, SearchConfig{2, 256, false});
    Expectimax none(net, SearchConfig{2, 0, false});
    std::mt19937_64 gen(12);
    for (int i = 0; i < 50; ++i) {
        const Board b = fixtures::random_reachable(gen);
        ASSERT_NEAR(tiny.chance_value(b, 2), none.chance_value(b, 2), 1e-6 * std::max(1.0, none.chance_value(b, 2)));
    }
}

TEST(SearchConfig, Validation) {
    EXPECT_THROW((SearchConfig{0, 0, false}.validate()), std::invalid_argument);
    EXPECT_THROW((SearchConfig{1, 1000, false}.validate()), std::invalid_argument);
    EXPECT_NO_THROW((SearchConfig{5, 1024, true}.validate()));
}

TEST(Zobrist, HashDependsOnEveryCell) {
    const Board b = fixtures::midgame();
    for (int p = 0; p < kCells; ++p) {
        Board c = b;
        c.set(p, (b.at(p) + 1) % 16);
        EXPECT_NE(zobrist_hash(b), zobrist_hash(c));
    }
    static_assert(zobrist_hash(Board{}) != 0);
}

TEST(Downgrade, HalvesTilesAboveLargestMissing) {
    const Board in = board_of({32768, 16384, 8192, 4096, 2048, 1024, 512, 128, 64});
    const Board want = board_of({16384, 8192, 4096, 2048, 1024, 512, 256, 128, 64});
    EXPECT_EQ(downgrade(in), want);
}

TEST(Downgrade, NeedsA32768Tile) {
    const Board b = board_of({16384, 4096, 2048, 64, 2});
    EXPECT_EQ(downgrade(b), b);
}

TEST(Downgrade, NoMissingTileIsIdentity) {
    const Board b = board_of({32768, 16384, 8192, 4096, 2048, 1024, 512, 256, 128, 64, 32, 16, 8, 4, 2, 2});
    EXPECT_EQ(downgrade(b), b);
    // 2 and 4 never count as missing
    const Board c = board_of({32768, 16384, 8192, 4096, 2048, 1024, 512, 256, 128, 64, 32, 16, 8});
    EXPECT_EQ(downgrade(c), c);
}

TEST(Downgrade, PreservesLayoutAndOrder) {
    std::mt19937_64 gen(13);
    int changed = 0;
    for (int i = 0; i < 2000; ++i) {
        Board b = fixtures::random_board(gen, 14);
        b.set(static_cast<int>(gen() % 16), 15);
        const Board d = downgrade(b);
        changed += d != b;
        for (int p = 0; p < kCells; ++p) {
            ASSERT_EQ(d.at(p) == 0, b.at(p) == 0);
            for (int q = 0; q < kCells; ++q) {
                ASSERT_EQ(b.at(p) < b.at(q), d.at(p) < d.at(q));
                ASSERT_EQ(b.at(p) == b.at(q), d.at(p) == d.at(q));
            }
        }
        if (d != b && d.max_exponent() >= kDowngradeTrigger) {
            // still carries a 32768 tile: the rule applies again, one level lower
            ASSERT_LE(downgrade(d).max_exponent(), d.max_exponent());
        }
    }
    EXPECT_GT(changed, 1000);
}

TEST(Downgrade, RootOnlyAndMovesMapBack) {
    Network net(fixtures::small_config());
    fill_random(net, 14);
    const Board s = board_of({32768, 16384, 8192, 4096, 2048, 1024, 512, 128, 64, 0, 2, 0, 0, 4, 0, 0});
    Expectimax search(net, SearchConfig{2, 0, true});
    const auto d = search.choose(s);
    ASSERT_TRUE(d);
    const auto real = slide(s, d->action);
    ASSERT_TRUE(real);
    EXPECT_EQ(d->afterstate, real->afterstate);
    EXPECT_EQ(d->reward, real->reward);
    Expectimax plain(net, SearchConfig{2, 0, false});
    EXPECT_EQ(d->action, plain.choose(downgrade(s))->action);
}
