#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "b2m/rng.hpp"

namespace b2m::memory {

inline constexpr int kNumStimuli = 3;
/// Input channel used when no stimulus is on screen.
inline constexpr int kNoStimulus = 3;
inline constexpr std::size_t kMaxEpisodeLength = 26;

struct Episode {
  std::int64_t id = 0;
  std::vector<int> stimuli;
  std::array<int, 2> target_pair{0, 1};
  int distractor = 2;
  int initial_target = 0;

  std::size_t length() const { return stimuli.size(); }
  /// Throws DomainError when the target/distractor partition or stimuli are invalid.
  void validate() const;
};

struct TaskState {
  std::array<int, 2> target_pair{0, 1};
  int current_target = 0;
  std::size_t step = 0;

  static TaskState initial(const Episode& episode);
};

enum class Action { reject, accept };

struct StepOutcome {
  Action action = Action::reject;
  TaskState next;
};

/// Accept iff the stimulus is the current target; a correct accept hands the
/// target role to the other member of the pair.
StepOutcome step_oracle(const TaskState& state, int stimulus);

struct StepRecord {
  int stimulus = 0;
  int target = 0;  // current target when the stimulus was shown
  Action action = Action::reject;
  bool switched = false;
};

std::vector<StepRecord> rollout(const Episode& episode);

/// +1 for accept, -1 for reject, one per step.
std::vector<int> signed_targets(const std::vector<StepRecord>& records);

Episode generate_episode(Rng& rng, std::size_t length, std::int64_t id = 0);

}  // namespace b2m::memory
