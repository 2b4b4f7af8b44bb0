#include "b2m/memory_task.hpp"

#include "b2m/error.hpp"

namespace b2m::memory {

void Episode::validate() const {
  auto valid_id = [](int s) { return s >= 0 && s < kNumStimuli; };
  if (stimuli.empty() || stimuli.size() > kMaxEpisodeLength) {
    throw DomainError("episode " + std::to_string(id) + ": length " +
                      std::to_string(stimuli.size()) + " outside [1, 26]");
  }
  if (!valid_id(target_pair[0]) || !valid_id(target_pair[1]) || !valid_id(distractor) ||
      target_pair[0] == target_pair[1] || distractor == target_pair[0] ||
      distractor == target_pair[1]) {
    throw DomainError("episode " + std::to_string(id) +
                      ": targets and distractor must partition {0,1,2}");
  }
  if (initial_target != target_pair[0] && initial_target != target_pair[1]) {
    throw DomainError("episode " + std::to_string(id) + ": initial target not in target pair");
  }
  for (std::size_t i = 0; i < stimuli.size(); ++i) {
    if (!valid_id(stimuli[i])) {
      throw DomainError("episode " + std::to_string(id) + ": stimulus " +
                        std::to_string(stimuli[i]) + " at step " + std::to_string(i));
    }
  }
}

TaskState TaskState::initial(const Episode& episode) {
  return {episode.target_pair, episode.initial_target, 0};
}

StepOutcome step_oracle(const TaskState& state, int stimulus) {
  if (stimulus < 0 || stimulus >= kNumStimuli) {
    throw DomainError("step_oracle: stimulus " + std::to_string(stimulus) + " is not in {0,1,2}");
  }
  StepOutcome out;
  out.next = state;
  out.next.step = state.step + 1;
  if (stimulus == state.current_target) {
    out.action = Action::accept;
    out.next.current_target = state.current_target == state.target_pair[0]
                                  ? state.target_pair[1]
                                  : state.target_pair[0];
  }
  return out;
}

std::vector<StepRecord> rollout(const Episode& episode) {
  episode.validate();
  std::vector<StepRecord> records;
  records.reserve(episode.length());
  TaskState state = TaskState::initial(episode);
  for (int stimulus : episode.stimuli) {
    const StepOutcome out = step_oracle(state, stimulus);
    records.push_back({stimulus, state.current_target, out.action,
                       out.next.current_target != state.current_target});
    state = out.next;
  }
  return records;
}

std::vector<int> signed_targets(const std::vector<StepRecord>& records) {
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.action == Action::accept ? 1 : -1);
  return out;
}

Episode generate_episode(Rng& rng, std::size_t length, std::int64_t id) {
  if (length < 1 || length > kMaxEpisodeLength) {
    throw DomainError("generate_episode: length " + std::to_string(length) +
                      " outside [1, 26]");
  }
  Episode ep;
  ep.id = id;
  ep.distractor = static_cast<int>(rng.below(kNumStimuli));
  int k = 0;
  for (int s = 0; s < kNumStimuli; ++s) {
    if (s != ep.distractor) ep.target_pair[k++] = s;
  }
  ep.initial_target = ep.target_pair[rng.below(2)];
  ep.stimuli.resize(length);
  for (auto& s : ep.stimuli) s = static_cast<int>(rng.below(kNumStimuli));
  return ep;
}

}  // namespace b2m::memory
