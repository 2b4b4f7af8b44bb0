#include <doctest.h>

#include "audits.hpp"
#include "b2m/error.hpp"
#include "b2m/memory_task.hpp"

using namespace b2m;
using namespace b2m::memory;

TEST_CASE("hand-worked episode") {
  Episode ep;
  ep.target_pair = {0, 1};
  ep.distractor = 2;
  ep.initial_target = 0;
  ep.stimuli = {2, 1, 0, 0, 1, 1};
  const auto rec = rollout(ep);
  // target: 0 0 0 1 1 0 ; accept at steps 2 (0) and 4 (1)
  const std::vector<int> targets{0, 0, 0, 1, 1, 0};
  const std::vector<int> signs{-1, -1, 1, -1, 1, -1};
  for (std::size_t t = 0; t < rec.size(); ++t) {
    CAPTURE(t);
    CHECK(rec[t].target == targets[t]);
  }
  CHECK(signed_targets(rec) == signs);
  CHECK(rec[2].switched);
  CHECK_FALSE(rec[3].switched);
}

TEST_CASE("step_oracle handles one step and rejects bad stimuli") {
  TaskState s{{1, 2}, 2, 0};
  auto out = step_oracle(s, 2);
  CHECK(out.action == Action::accept);
  CHECK(out.next.current_target == 1);
  CHECK(out.next.step == 1);
  out = step_oracle(s, 0);
  CHECK(out.action == Action::reject);
  CHECK(out.next.current_target == 2);
  CHECK_THROWS_AS(step_oracle(s, 3), DomainError);
  CHECK_THROWS_AS(step_oracle(s, -1), DomainError);
}

TEST_CASE("simulator invariants over 1e5 steps") {
  const auto a = testing::audit_simulator(123, 100000);
  CHECK(a.steps >= 100000);
  CHECK(a.violations() == 0);
  CHECK(a.accepts == a.switches);
  // Accepts happen on 1/3 of steps.
  CHECK(a.accepts / double(a.steps) == doctest::Approx(1.0 / 3).epsilon(0.02));
}

TEST_CASE("episode validation") {
  Rng rng(1);
  Episode ep = generate_episode(rng, 26, 4);
  CHECK_NOTHROW(ep.validate());
  CHECK(ep.length() == 26);
  Episode bad = ep;
  bad.distractor = bad.target_pair[0];
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = ep;
  bad.initial_target = bad.distractor;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = ep;
  bad.stimuli[3] = 3;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = ep;
  bad.stimuli.clear();
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CHECK_THROWS_AS(generate_episode(rng, 27), DomainError);
  CHECK_THROWS_AS(generate_episode(rng, 0), DomainError);
}

TEST_CASE("episode generation is seeded") {
  Rng a(8), b(8);
  const Episode x = generate_episode(a, 10, 1), y = generate_episode(b, 10, 1);
  CHECK(x.stimuli == y.stimuli);
  CHECK(x.initial_target == y.initial_target);
  CHECK(x.distractor == y.distractor);
}
