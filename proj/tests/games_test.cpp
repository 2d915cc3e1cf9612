#include <gtest/gtest.h>

#include <set>

#include "btom/games.hpp"

namespace btom {
namespace {

GameState at(Cell self, Cell oppo, Owner ball = Owner::Self, int step = 0) {
  GameState s;
  s.pos_self = self;
  s.pos_oppo = oppo;
  s.ball = ball;
  s.step = step;
  return s;
}

TEST(Rps, PayoffTable) {
  const auto spec = rps_spec();
  const GameState s;
  auto r = [&](int a, int b) { return step(spec, s, a, b).outcome->r_self; };
  EXPECT_EQ(r(kRock, kScissors), 1.0);
  EXPECT_EQ(r(kRock, kRock), 0.0);
  EXPECT_EQ(r(kScissors, kRock), -1.0);
  EXPECT_EQ(r(kPaper, kRock), 1.0);
  EXPECT_EQ(r(kScissors, kPaper), 1.0);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const auto res = step(spec, s, a, b);
      EXPECT_TRUE(res.terminal);
      EXPECT_EQ(res.outcome->r_self, -res.outcome->r_oppo);
    }
}

TEST(Rps, ResetIsStateless) {
  Rng rng(1);
  EXPECT_EQ(reset(rps_spec(), rng), GameState{});
  EXPECT_EQ(state_index(rps_spec(), GameState{}), 0u);
}

TEST(Step, RejectsIllegalActions) {
  EXPECT_THROW(step(rps_spec(), GameState{}, 3, 0), Error);
  EXPECT_THROW(step(soccer_spec(), at({1, 3}, {5, 3}), 0, 5), Error);
}

TEST(Soccer, CollisionFlipsPossessionAndBothStay) {
  const auto spec = soccer_spec();
  const auto res = step(spec, at({2, 3}, {4, 3}), kRight, kLeft);
  ASSERT_FALSE(res.terminal);
  EXPECT_EQ(res.next.pos_self, (Cell{2, 3}));
  EXPECT_EQ(res.next.pos_oppo, (Cell{4, 3}));
  EXPECT_EQ(res.next.ball, Owner::Oppo);
}

TEST(Soccer, WalkingIntoStandingPlayerIsBlocked) {
  const auto spec = soccer_spec();
  const auto res = step(spec, at({2, 3}, {3, 3}), kRight, kStay);
  EXPECT_EQ(res.next.pos_self, (Cell{2, 3}));
  EXPECT_EQ(res.next.ball, Owner::Self);
}

TEST(Soccer, CarrierScoresThroughGoalMouth) {
  const auto spec = soccer_spec();
  auto res = step(spec, at({6, 3}, {2, 3}, Owner::Self), kRight, kStay);
  ASSERT_TRUE(res.terminal);
  EXPECT_EQ(res.outcome->result, Result::Win);
  res = step(spec, at({4, 4}, {0, 2}, Owner::Oppo), kStay, kLeft);
  ASSERT_TRUE(res.terminal);
  EXPECT_EQ(res.outcome->result, Result::Lose);
  // Outside the goal rows the edge is just a wall.
  res = step(spec, at({6, 0}, {2, 3}, Owner::Self), kRight, kStay);
  EXPECT_FALSE(res.terminal);
  EXPECT_EQ(res.next.pos_self, (Cell{6, 0}));
  // Without the ball nothing is scored.
  res = step(spec, at({6, 3}, {2, 3}, Owner::Oppo), kRight, kStay);
  EXPECT_FALSE(res.terminal);
}

TEST(Soccer, StepLimitIsADraw) {
  const auto spec = soccer_spec();
  const auto res = step(spec, at({1, 1}, {5, 5}, Owner::Self, 49), kStay, kStay);
  ASSERT_TRUE(res.terminal);
  EXPECT_EQ(res.outcome->result, Result::Draw);
  EXPECT_EQ(res.outcome->r_self, 0.0);
  EXPECT_EQ(res.outcome->r_oppo, 0.0);
  EXPECT_EQ(res.outcome->steps, 50);
}

TEST(Soccer, ResetUsesStartCellsAndBothOwners) {
  const auto spec = soccer_spec();
  std::set<int> owners;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const auto s = reset(spec, rng);
    EXPECT_EQ(s.pos_self.x, 1);
    EXPECT_EQ(s.pos_oppo.x, 5);
    EXPECT_EQ(s.step, 0);
    owners.insert(static_cast<int>(s.ball));
  }
  EXPECT_EQ(owners.size(), 2u);
}

TEST(Soccer, StateIndexIsABijection) {
  const auto spec = soccer_spec();
  std::set<std::size_t> seen;
  for (int a = 0; a < spec.num_cells(); ++a)
    for (int b = 0; b < spec.num_cells(); ++b)
      for (int own = 0; own < 2; ++own) {
        const auto s = at({a % 7, a / 7}, {b % 7, b / 7}, static_cast<Owner>(own));
        const auto idx = state_index(spec, s);
        ASSERT_LT(idx, spec.num_states());
        EXPECT_TRUE(seen.insert(idx).second);
        EXPECT_EQ(state_from_index(spec, idx), s);
      }
  EXPECT_EQ(seen.size(), spec.num_states());
  EXPECT_THROW(state_from_index(spec, spec.num_states()), Error);
}

TEST(Thieves, ResetIsDeterministic) {
  Rng rng(5);
  const auto s = reset(thieves_spec(), rng);
  EXPECT_EQ(s.pos_self, (Cell{2, 3}));
  EXPECT_EQ(s.pos_oppo, (Cell{6, 3}));
  EXPECT_EQ(s.step, 0);
}

TEST(Thieves, ThiefEnteringGoalWins) {
  const auto res = step(thieves_spec(), at({3, 3}, {2, 1}), kStay, kLeft);
  ASSERT_TRUE(res.terminal);
  EXPECT_EQ(res.outcome->result, Result::Lose);
}

TEST(Thieves, CollisionInGoalIsAHunterWin) {
  const auto res = step(thieves_spec(), at({1, 2}, {2, 1}), kUp, kLeft);
  ASSERT_TRUE(res.terminal);
  EXPECT_EQ(res.outcome->result, Result::Win);
}

TEST(Thieves, CollisionOutsideGoalsLeavesBothInPlace) {
  const auto res = step(thieves_spec(), at({2, 3}, {4, 3}), kRight, kLeft);
  ASSERT_FALSE(res.terminal);
  EXPECT_EQ(res.next.pos_self, (Cell{2, 3}));
  EXPECT_EQ(res.next.pos_oppo, (Cell{4, 3}));
}

TEST(Thieves, StandingHunterBlocksNobody) {
  const auto res = step(thieves_spec(), at({1, 1}, {2, 1}), kStay, kLeft);
  ASSERT_TRUE(res.terminal);
  EXPECT_EQ(res.outcome->result, Result::Lose);
}

TEST(Thieves, SwapsGoThrough) {
  const auto res = step(thieves_spec(), at({3, 3}, {4, 3}), kRight, kLeft);
  ASSERT_FALSE(res.terminal);
  EXPECT_EQ(res.next.pos_self, (Cell{4, 3}));
  EXPECT_EQ(res.next.pos_oppo, (Cell{3, 3}));
}

TEST(Layout, BlockedCellsActAsWalls) {
  auto spec = parse_layout("game=thieves\nblocked=3:3\n");
  const auto res = step(spec, at({2, 3}, {6, 3}), kRight, kStay);
  EXPECT_EQ(res.next.pos_self, (Cell{2, 3}));
}

TEST(Layout, FormatRoundTrips) {
  for (auto id : {GameId::RPS, GameId::Soccer, GameId::ThievesHunters}) {
    auto spec = default_spec(id);
    if (id != GameId::RPS) spec.blocked = {{3, 0}, {3, 6}};
    const auto text = format_layout(spec);
    EXPECT_EQ(format_layout(parse_layout(text)), text);
  }
}

TEST(Layout, Errors) {
  EXPECT_THROW(parse_layout("width=7\n"), Error);
  EXPECT_THROW(parse_layout("game=soccer\ncolour=red\n"), Error);
  EXPECT_THROW(parse_layout("game=soccer\nstart_self=9:9\n"), Error);
  EXPECT_THROW(parse_layout("game=thieves\nblocked=1:1\n"), Error);
  EXPECT_THROW(parse_layout("game=soccer\nwidth=seven\n"), Error);
  EXPECT_THROW(parse_layout("game=chess\n"), Error);
  EXPECT_THROW(parse_layout(""), Error);
}

}  // namespace
}  // namespace btom
