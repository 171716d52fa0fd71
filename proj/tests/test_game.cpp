#include <doctest.h>

#include "grasper/error.hpp"
#include "grasper/game.hpp"
#include "grasper/instance.hpp"

using namespace grasper;

namespace {

// Line graph 0-1-2-3-4 with exit at 4.
GameSpec line_spec(int evader_start, std::vector<int> pursuers, int horizon) {
  GameSpec spec;
  spec.graph = Graph::from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  spec.exits = {4};
  spec.pursuer_starts = std::move(pursuers);
  spec.evader_start = evader_start;
  spec.horizon = horizon;
  spec.validate();
  return spec;
}

EvaderPlan plan_to_exit(const GameSpec& spec, uint64_t seed = 1) {
  Rng rng(seed);
  return make_evader_plan(spec, spec.exits[0], rng);
}

}  // namespace

TEST_CASE("reset: co-location with a pursuer is an immediate capture") {
  const GameSpec spec = line_spec(1, {1}, 4);
  const GameState state = reset(spec, plan_to_exit(spec));
  CHECK(state.terminal);
  CHECK(state.cause == TerminalCause::capture);
  CHECK(terminal_pursuer_reward(state.cause) == 1.0);
}

TEST_CASE("reset: ordinary spec starts non-terminal at t=0") {
  const GameSpec spec = line_spec(0, {3}, 4);
  const GameState state = reset(spec, plan_to_exit(spec));
  CHECK(!state.terminal);
  CHECK(state.t == 0);
  CHECK(state.evader_loc == 0);
}

TEST_CASE("reset: plan starting elsewhere is an input error") {
  const GameSpec spec = line_spec(0, {3}, 4);
  EvaderPlan bad;
  bad.chosen_exit = 4;
  bad.path = {1, 2, 3, 4};
  CHECK_THROWS_AS(reset(spec, bad), input_error);
}

TEST_CASE("step: evader walking into a staying pursuer is captured") {
  const GameSpec spec = line_spec(0, {1}, 4);
  const EvaderPlan plan = plan_to_exit(spec);
  const GameState state = reset(spec, plan);
  const StepOutcome out = step(spec, plan, state, {1});
  CHECK(out.next.terminal);
  CHECK(out.next.cause == TerminalCause::capture);
  CHECK(out.reward_p == 1.0);
  CHECK(out.reward_e == -1.0);
}

TEST_CASE("step: evader reaching a free exit escapes") {
  const GameSpec spec = line_spec(3, {0}, 4);
  const EvaderPlan plan = plan_to_exit(spec);
  const GameState state = reset(spec, plan);
  const StepOutcome out = step(spec, plan, state, {0});
  CHECK(out.next.terminal);
  CHECK(out.next.cause == TerminalCause::escape);
  CHECK(out.reward_p == -1.0);
  CHECK(out.reward_e == 1.0);
}

TEST_CASE("step: reaching the horizon without capture or escape is a pursuer win") {
  const GameSpec spec = line_spec(0, {2}, 1);  // T = 1, evader needs 4 steps
  const EvaderPlan plan = plan_to_exit(spec);
  const GameState state = reset(spec, plan);
  const StepOutcome out = step(spec, plan, state, {2});
  CHECK(out.next.terminal);
  CHECK(out.next.cause == TerminalCause::timeout);
  CHECK(out.reward_p == 1.0);
}

TEST_CASE("step: capture has priority over escape in the same step") {
  // Pursuer stands on the exit; evader arrives there.
  const GameSpec spec = line_spec(3, {4}, 4);
  const EvaderPlan plan = plan_to_exit(spec);
  const GameState state = reset(spec, plan);
  const StepOutcome out = step(spec, plan, state, {4});
  CHECK(out.next.cause == TerminalCause::capture);
  CHECK(out.reward_p == 1.0);
}

TEST_CASE("step: edge swap is not a capture") {
  const GameSpec spec = line_spec(0, {1}, 4);
  const EvaderPlan plan = plan_to_exit(spec);
  const GameState state = reset(spec, plan);
  // Evader moves 0->1 while the pursuer moves 1->0: they swap, no capture.
  const StepOutcome out = step(spec, plan, state, {0});
  CHECK(!out.next.terminal);
  CHECK(out.reward_p == 0.0);
}

TEST_CASE("step: illegal action names the offending member") {
  const GameSpec spec = line_spec(0, {3, 1}, 4);
  const EvaderPlan plan = plan_to_exit(spec);
  const GameState state = reset(spec, plan);
  try {
    step(spec, plan, state, {3, 4});  // member 1 cannot jump 1 -> 4
    FAIL("expected input_error");
  } catch (const input_error& e) {
    CHECK(std::string(e.what()).find("member 1") != std::string::npos);
  }
}

TEST_CASE("rollout: stay-forever pursuer off the path lets the evader escape") {
  const GameSpec spec = line_spec(2, {0}, 4);
  const EvaderPlan plan = plan_to_exit(spec);
  const EpisodeRecord record = rollout(spec, plan, [](const Observation& obs) {
    return obs.pursuer_locs[static_cast<size_t>(obs.member_id)];
  });
  CHECK(record.cause == TerminalCause::escape);
  CHECK(record.total_reward_p == -1.0);
  CHECK(record.steps.size() == 2);
}

TEST_CASE("rollout: pursuer guarding the chosen exit captures on arrival") {
  const GameSpec spec = line_spec(0, {4}, 6);
  const EvaderPlan plan = plan_to_exit(spec);
  const EpisodeRecord record = rollout(spec, plan, [](const Observation& obs) {
    return obs.pursuer_locs[static_cast<size_t>(obs.member_id)];
  });
  CHECK(record.cause == TerminalCause::capture);
  CHECK(record.total_reward_p == 1.0);
  CHECK(record.steps.size() == 4);  // hand trace: evader 0->1->2->3->4, caught at 4
}

TEST_CASE("rollout: T=1 with a long path times out after one step") {
  const GameSpec spec = line_spec(0, {2}, 1);
  const EvaderPlan plan = plan_to_exit(spec);
  const EpisodeRecord record = rollout(spec, plan, [](const Observation& obs) {
    return obs.pursuer_locs[static_cast<size_t>(obs.member_id)];
  });
  CHECK(record.cause == TerminalCause::timeout);
  CHECK(record.steps.size() == 1);
}

TEST_CASE("zero-sum and termination invariants over random play") {
  MapTemplate tmpl;
  tmpl.kind = MapTemplate::Kind::grid;
  tmpl.width = 4;
  tmpl.height = 4;
  tmpl.edge_keep_prob = 0.9;
  InstanceConfig icfg;
  icfg.n_pursuers = 2;
  icfg.n_exits = 2;
  icfg.t_min = 2;
  icfg.t_max = 5;
  icfg.min_evader_distance = 2;
  Rng rng(12);
  int steps_checked = 0;
  while (steps_checked < 10000) {
    const Graph g = build_map(tmpl, rng);
    GameSpec spec;
    try {
      spec = sample_instance(g, icfg, rng, 200);
    } catch (const generation_error&) {
      continue;
    }
    std::vector<double> uniform(spec.exits.size(), 1.0 / static_cast<double>(spec.exits.size()));
    const EvaderPlan plan = sample_evader_plan(spec, uniform, rng);
    GameState state = reset(spec, plan);
    double total_p = 0.0, total_e = 0.0;
    if (state.terminal) {
      total_p += terminal_pursuer_reward(state.cause);
      total_e -= terminal_pursuer_reward(state.cause);
    }
    while (!state.terminal) {
      std::vector<int> actions;
      for (int i = 0; i < spec.n_pursuers(); ++i) {
        const auto legal = legal_actions(spec.graph, state.pursuer_locs[static_cast<size_t>(i)]);
        actions.push_back(legal[static_cast<size_t>(rng.uniform_int(
            static_cast<int64_t>(legal.size())))]);
      }
      const StepOutcome out = step(spec, plan, state, actions);
      CHECK(out.reward_p + out.reward_e == 0.0);
      if (!out.next.terminal) {
        CHECK(out.reward_p == 0.0);  // pre-terminal rewards are exactly 0
        CHECK(out.next.cause == TerminalCause::none);
      } else {
        CHECK(out.next.cause != TerminalCause::none);
        CHECK(std::abs(out.reward_p) == 1.0);
      }
      CHECK(out.next.t <= spec.horizon);
      total_p += out.reward_p;
      total_e += out.reward_e;
      state = out.next;
      ++steps_checked;
    }
    CHECK(total_p + total_e == 0.0);
    CHECK(state.t <= spec.horizon);
  }
}

TEST_CASE("game spec JSON round-trip preserves structural equality") {
  const GameSpec spec = line_spec(0, {3, 1}, 4);
  const GameSpec back = GameSpec::from_json(spec.to_json());
  CHECK(back.same_game(spec));
  GameSpec other = spec;
  other.horizon = 5;
  CHECK(!other.same_game(spec));
}

TEST_CASE("episode records serialize to JSON-lines") {
  const GameSpec spec = line_spec(0, {4}, 6);
  const EvaderPlan plan = plan_to_exit(spec);
  const EpisodeRecord record = rollout(spec, plan, [](const Observation& obs) {
    return obs.pursuer_locs[static_cast<size_t>(obs.member_id)];
  });
  const nlohmann::json j = record.to_json();
  CHECK(j.at("cause") == "capture");
  CHECK(j.at("steps").size() == record.steps.size());
  CHECK(j.at("evader_path").size() == plan.path.size());
}
