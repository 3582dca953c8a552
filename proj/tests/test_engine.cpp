#include <gtest/gtest.h>

#include <chrono>
#include <set>

#include "fixtures.hpp"

using namespace otd;

TEST(SlideRow, MatchesReferenceOnAllRows) {
    const MoveTable& table = MoveTable::get(16);
    for (std::uint32_t v = 0; v < (1u << 16); ++v) {
        const Row row = unpack_row(static_cast<std::uint16_t>(v));
        const auto [want_row, want_reward] = fixtures::reference_slide(row);
        const RowResult got = table.slide_row(row);
        ASSERT_EQ(got.row, want_row) << "row " << v;
        ASSERT_EQ(got.reward, want_reward) << "row " << v;
    }
}

TEST(SlideRow, MatchesReferenceAtSmallCardinality) {
    for (unsigned c : {3u, 5u, 12u}) {
        const MoveTable& table = MoveTable::get(c);
        for (std::uint32_t v = 0; v < (1u << 16); ++v) {
            const Row row = unpack_row(static_cast<std::uint16_t>(v));
            bool valid = true;
            for (int e : row) valid = valid && static_cast<unsigned>(e) < c;
            if (!valid) continue;
            const auto [want_row, want_reward] = fixtures::reference_slide(row, c);
            ASSERT_EQ(table.slide_row(row), (RowResult{want_row, want_reward})) << "c=" << c << " row " << v;
        }
    }
}

TEST(SlideRow, Examples) {
    EXPECT_EQ(slide_row({1, 1, 0, 0}), (RowResult{{2, 0, 0, 0}, 4}));
    EXPECT_EQ(slide_row({1, 1, 1, 1}), (RowResult{{2, 2, 0, 0}, 8}));
    EXPECT_EQ(slide_row({0, 0, 0, 0}), (RowResult{{0, 0, 0, 0}, 0}));
    EXPECT_EQ(slide_row({1, 1, 1, 0}), (RowResult{{2, 1, 0, 0}, 4}));
    EXPECT_EQ(slide_row({0, 2, 0, 2}), (RowResult{{3, 0, 0, 0}, 8}));
    EXPECT_EQ(slide_row({2, 1, 1, 0}), (RowResult{{2, 2, 0, 0}, 4}));
}

TEST(SlideRow, OverflowMergeIsBlocked) {
    EXPECT_EQ(slide_row({15, 15, 0, 0}), (RowResult{{15, 15, 0, 0}, 0}));
    EXPECT_EQ(slide_row({0, 15, 0, 15}), (RowResult{{15, 15, 0, 0}, 0}));
    EXPECT_EQ(slide_row({14, 14, 0, 0}), (RowResult{{15, 0, 0, 0}, 32768}));
    EXPECT_EQ(slide_row({2, 2, 0, 0}, 3), (RowResult{{2, 2, 0, 0}, 0}));
}

TEST(SlideRow, RejectsOutOfRangeExponent) {
    EXPECT_THROW(slide_row({3, 0, 0, 0}, 3), std::invalid_argument);
    EXPECT_THROW(MoveTable(17), config_error);
    EXPECT_THROW(MoveTable(2), config_error);
}

TEST(Board, PackUnpackRoundTrip) {
    std::mt19937_64 gen(1);
    for (int i = 0; i < 1000; ++i) {
        std::array<int, kCells> e{};
        for (auto& x : e) x = static_cast<int>(gen() % 16);
        const Board b = Board::from_exponents(e);
        for (int p = 0; p < kCells; ++p) ASSERT_EQ(b.at(p), e[p]);
        for (int r = 0; r < 4; ++r)
            for (int k = 0; k < 4; ++k) ASSERT_EQ((b.raw() >> (4 * (4 * r + k))) & 0xf, static_cast<unsigned>(e[4 * r + k]));
    }
}

TEST(Board, RejectsExponentsOutsideCardinality) {
    std::array<int, kCells> e{};
    e[3] = 12;
    EXPECT_NO_THROW(Board::from_exponents(e, 13));
    EXPECT_THROW(Board::from_exponents(e, 12), std::invalid_argument);
    EXPECT_THROW(Board::from_tiles({3}), std::invalid_argument);
}

TEST(Board, RenderParseRoundTrip) {
    const Board a = fixtures::midgame();
    EXPECT_EQ(render(a), "32 2 0 0\n32 2 16 2\n8 4 0 0\n16 4 0 0\n");
    EXPECT_EQ(parse_board(render(a)), a);
    EXPECT_THROW(parse_board("2 4 8"), std::invalid_argument);
}

TEST(Slide, WorkedExampleUp) {
    const auto r = slide(fixtures::midgame(), Action::Up);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->reward, 76u);
    EXPECT_EQ(r->afterstate, fixtures::midgame_up());
}

TEST(Slide, WorkedExampleLeft) {
    const auto r = slide(fixtures::midgame_up_spawned(), Action::Left);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->reward, 16u);
    EXPECT_EQ(r->afterstate, fixtures::midgame_up_left());
}

TEST(Slide, EmptyBoardIsIllegalEverywhere) {
    for (Action a : kActions) EXPECT_FALSE(slide(Board{}, a));
    EXPECT_TRUE(legal_actions(Board{}).empty());
}

TEST(Slide, LeftMatchesRowSlide) {
    std::mt19937_64 gen(2);
    for (int i = 0; i < 2000; ++i) {
        const Board b = fixtures::random_board(gen);
        const auto r = slide(b, Action::Left);
        const Board after = r ? r->afterstate : b;
        std::uint32_t reward = 0;
        for (int row = 0; row < 4; ++row) {
            const RowResult rr = slide_row(unpack_row(b.row(row)));
            ASSERT_EQ(unpack_row(after.row(row)), rr.row);
            reward += rr.reward;
        }
        ASSERT_EQ(r ? r->reward : 0u, reward);
    }
}

TEST(Slide, DirectionsAreConjugateToLeft) {
    // symmetry that carries each direction onto Left
    const std::array<std::pair<Action, int>, 4> conj = {
        {{Action::Up, 7}, {Action::Right, 4}, {Action::Down, 1}, {Action::Left, 0}}};
    std::mt19937_64 gen(3);
    for (int i = 0; i < 2000; ++i) {
        const Board b = fixtures::random_board(gen);
        for (auto [a, g] : conj) {
            const auto direct = slide(b, a);
            const auto via = slide(transform(b, g), Action::Left);
            ASSERT_EQ(direct.has_value(), via.has_value());
            if (!direct) continue;
            ASSERT_EQ(direct->afterstate, transform(via->afterstate, inverse_symmetry(g)));
            ASSERT_EQ(direct->reward, via->reward);
        }
    }
}

TEST(Slide, RewardIsSumOfMergedTiles) {
    std::mt19937_64 gen(4);
    for (int i = 0; i < 2000; ++i) {
        const Board b = fixtures::random_board(gen, 8);
        for (Action a : kActions) {
            const auto r = slide(b, a);
            if (!r) continue;
            // each merge of two 2^e tiles removes them and creates one 2^(e+1) of equal total value
            std::uint64_t sum_before = 0, sum_after = 0;
            for (int p = 0; p < kCells; ++p) {
                sum_before += tile_value(b.at(p));
                sum_after += tile_value(r->afterstate.at(p));
            }
            ASSERT_EQ(sum_before, sum_after);
            const int merges = b.count_tiles() - r->afterstate.count_tiles();
            ASSERT_GE(merges, 0);
            ASSERT_EQ(r->reward == 0, merges == 0);
        }
    }
}

TEST(Slide, NeverIncreasesTileCount) {
    std::mt19937_64 gen(5);
    for (int i = 0; i < 2000; ++i) {
        const Board b = fixtures::random_board(gen);
        for (Action a : kActions) {
            const auto r = slide(b, a);
            if (r) {
                ASSERT_LE(r->afterstate.count_tiles(), b.count_tiles());
            }
        }
    }
}

TEST(LegalActions, SingleCornerTile) {
    Board b;
    b.set(0, 1); // top-left corner
    EXPECT_EQ(legal_actions(b), (std::vector<Action>{Action::Right, Action::Down}));
    Board c;
    c.set(15, 1);
    EXPECT_EQ(legal_actions(c), (std::vector<Action>{Action::Up, Action::Left}));
}

TEST(LegalActions, CheckerboardIsTerminal) {
    Board b;
    for (int r = 0; r < 4; ++r)
        for (int k = 0; k < 4; ++k) b.set(4 * r + k, (r + k) % 2 ? 2 : 1);
    for (Action a : kActions) EXPECT_FALSE(slide(b, a));
    EXPECT_TRUE(is_terminal(b));
}

TEST(LegalActions, MaskAgreesWithSlide) {
    std::mt19937_64 gen(6);
    for (int i = 0; i < 1000; ++i) {
        const Board b = fixtures::random_board(gen, 4);
        const auto mask = legal_mask(b);
        for (Action a : kActions) ASSERT_EQ(bool(mask & (1u << int(a))), slide(b, a).has_value());
    }
}

TEST(Spawn, FourTileFrequency) {
    Board b;
    for (int p = 0; p < kCells; ++p) b.set(p, (p % 3) + 3);
    b.set(9, 0);
    Rng rng(2024);
    int fours = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const Board s = spawn(b, rng);
        ASSERT_TRUE(s.at(9) == 1 || s.at(9) == 2);
        Board rest = s;
        rest.set(9, 0);
        ASSERT_EQ(rest, b);
        fours += s.at(9) == 2;
    }
    EXPECT_NEAR(static_cast<double>(fours) / n, 0.10, 0.01);
}

TEST(Spawn, FullBoardThrows) {
    Board b(0x1212121212121212ull);
    Rng rng(1);
    EXPECT_THROW(spawn(b, rng), std::logic_error);
}

TEST(Spawn, CellChoiceIsUniform) {
    Rng rng(99);
    std::array<int, kCells> hits{};
    const int n = 160000;
    for (int i = 0; i < n; ++i) {
        const Board s = spawn(Board{}, rng);
        ASSERT_EQ(s.count_tiles(), 1);
        for (int p = 0; p < kCells; ++p) hits[p] += s.at(p) != 0;
    }
    for (int h : hits) EXPECT_NEAR(h, n / 16, 400); // ~5 sd
}

TEST(InitialState, TwoSmallTiles) {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const Board b = initial_state(rng);
        ASSERT_EQ(b.count_tiles(), 2);
        for (int p = 0; p < kCells; ++p) ASSERT_TRUE(b.at(p) == 0 || b.at(p) == 1 || b.at(p) == 2);
    }
    Rng a(11), c(11);
    EXPECT_EQ(initial_state(a), initial_state(c));
}

TEST(Symmetry, IdentityAndInvolutions) {
    std::mt19937_64 gen(8);
    for (int i = 0; i < 500; ++i) {
        const Board b = fixtures::random_board(gen, 15);
        ASSERT_EQ(transform(b, 0), b);
        ASSERT_EQ(mirror(mirror(b)), b);
        ASSERT_EQ(flip(flip(b)), b);
        ASSERT_EQ(transpose(transpose(b)), b);
        for (int g = 4; g < 8; ++g) ASSERT_EQ(transform(transform(b, g), g), b);
        ASSERT_EQ(rotate_ccw(rotate_cw(b)), b);
    }
}

TEST(Symmetry, FormsDihedralGroup) {
    // distinct on a board with all cells distinct, closed under composition, inverses valid
    Board id;
    for (int p = 0; p < kCells; ++p) id.set(p, p);
    std::set<std::uint64_t> images;
    for (int g = 0; g < 8; ++g) images.insert(transform(id, g).raw());
    EXPECT_EQ(images.size(), 8u);
    for (int g = 0; g < 8; ++g) {
        EXPECT_EQ(transform(transform(id, g), inverse_symmetry(g)), id);
        for (int h = 0; h < 8; ++h) EXPECT_TRUE(images.contains(transform(transform(id, g), h).raw()));
    }
    // rotations: r^4 = e, and mirror * r * mirror = r^-1
    EXPECT_EQ(transform(id, 1), rotate_cw(id));
    EXPECT_EQ(rotate_cw(rotate_cw(rotate_cw(rotate_cw(id)))), id);
    EXPECT_EQ(mirror(rotate_cw(mirror(id))), rotate_ccw(id));
}

TEST(Symmetry, TransformsPreserveTileMultiset) {
    std::mt19937_64 gen(9);
    for (int i = 0; i < 200; ++i) {
        const Board b = fixtures::random_board(gen, 15);
        std::multiset<int> want;
        for (int p = 0; p < kCells; ++p) want.insert(b.at(p));
        for (int g = 0; g < 8; ++g) {
            std::multiset<int> got;
            for (int p = 0; p < kCells; ++p) got.insert(transform(b, g).at(p));
            ASSERT_EQ(got, want);
        }
    }
}

TEST(Symmetry, QuarterTurnOfWorkedExample) {
    // turning the board clockwise brings the left column, read bottom-up, to the top row
    const Board r = rotate_cw(fixtures::midgame());
    EXPECT_EQ(tile_value(r.at(0, 0)), 16u);
    EXPECT_EQ(tile_value(r.at(0, 1)), 8u);
    EXPECT_EQ(tile_value(r.at(0, 2)), 32u);
    EXPECT_EQ(tile_value(r.at(0, 3)), 32u);
}

TEST(Episode, ScoreIsSumOfRewards) {
    Rng rng(5);
    Board s = initial_state(rng);
    std::uint64_t score = 0;
    std::vector<std::uint32_t> rewards;
    while (!is_terminal(s)) {
        const auto legal = legal_actions(s);
        const auto r = slide(s, legal[rng.below(static_cast<std::uint32_t>(legal.size()))]);
        rewards.push_back(r->reward);
        score += r->reward;
        const Board next = spawn(r->afterstate, rng);
        ASSERT_EQ(next.count_tiles(), r->afterstate.count_tiles() + 1);
        s = next;
    }
    std::uint64_t sum = 0;
    for (auto x : rewards) sum += x;
    EXPECT_EQ(sum, score);
    EXPECT_GT(rewards.size(), 10u);
}

TEST(MoveTableTiming, ExhaustiveCheckIsFast) {
    const auto t0 = std::chrono::steady_clock::now();
    MoveTable fresh(16);
    std::uint64_t acc = 0;
    for (std::uint32_t v = 0; v < (1u << 16); ++v) acc += fresh.reward(static_cast<std::uint16_t>(v));
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_GT(acc, 0u);
    EXPECT_LT(s, 5.0);
}
