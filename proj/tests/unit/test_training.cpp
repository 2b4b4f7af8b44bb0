#include <doctest.h>

#include <cmath>
#include <limits>

#include "b2m/training.hpp"

using namespace b2m;

namespace {

ExperimentConfig tiny_memory() {
  auto c = ExperimentConfig::defaults(TaskKind::memory);
  c.epochs = 3;
  c.learning_rate = 1e-3;
  c.memory.model.hidden_size = 8;
  c.memory.train_sequences = 12;
  c.memory.test_sequences = 20;
  return c;
}

ExperimentConfig tiny_scene() {
  auto c = ExperimentConfig::defaults(TaskKind::scene);
  c.epochs = 2;
  c.scene.dims = {16, 8, 1};
  c.scene.model.input_dim = 16 * 8;
  c.scene.model.encoder_widths = {16};
  c.scene.model.decoder_widths = {16};
  c.scene.model.embedding_dim = 8;
  c.scene.train_scenes = 40;
  c.scene.test_scenes = 10;
  c.scene.human_scenes = 40;
  c.teachers = {TeacherMode::oracle, TeacherMode::noise};
  return c;
}

bool same_history(const RunResult& a, const RunResult& b) {
  if (a.history.size() != b.history.size()) return false;
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    if (a.history[i].train_loss != b.history[i].train_loss ||
        a.history[i].test_metric != b.history[i].test_metric ||
        a.history[i].test_loss != b.history[i].test_loss) {
      return false;
    }
  }
  return a.final_metric == b.final_metric;
}

}  // namespace

TEST_CASE("divergence truth table") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_FALSE(detect_divergence({}));
  CHECK_FALSE(detect_divergence({0.5, 0.4, 0.3}));
  CHECK_FALSE(detect_divergence({0.5, 1.0}));        // equal to 1 is not above
  CHECK_FALSE(detect_divergence({2.0, 3.0, 0.9}));   // recovered
  CHECK(detect_divergence({0.5, 1.5}));
  CHECK(detect_divergence({1.5, 0.5, 1.2}));
  CHECK(detect_divergence({0.2, nan}));
  CHECK(detect_divergence({0.2, inf}));
  CHECK_FALSE(detect_divergence({nan, 0.3}));
}

TEST_CASE("epochs to convergence") {
  CHECK(epochs_to_convergence({}, true) == 0);
  CHECK(epochs_to_convergence({0.1, 0.5, 0.96, 1.0}, true) == 3);
  CHECK(epochs_to_convergence({0.95, 0.2, 1.0}, true) == 1);
  CHECK(epochs_to_convergence({1.0, 0.5, 0.104, 0.1}, false) == 3);
  CHECK(epochs_to_convergence({0.3}, false) == 1);
}

TEST_CASE("run ids and fingerprints") {
  const auto c = tiny_memory();
  CHECK(run_id(c, {0.02, TeacherMode::oracle, 3}) == "memory-a0.0200-oracle-s3");
  CHECK(run_id(c, {0.0, TeacherMode::none, 1}) == "memory-a0.0000-none-s1");
  // Seeds share a fingerprint; alpha = 0 does not depend on the teacher.
  CHECK(run_fingerprint(c, {0.1, TeacherMode::oracle, 1}) ==
        run_fingerprint(c, {0.1, TeacherMode::oracle, 2}));
  CHECK(run_fingerprint(c, {0.0, TeacherMode::oracle, 1}) ==
        run_fingerprint(c, {0.0, TeacherMode::noise, 1}));
  CHECK(run_fingerprint(c, {0.1, TeacherMode::oracle, 1}) !=
        run_fingerprint(c, {0.1, TeacherMode::noise, 1}));
}

TEST_CASE("memory runs are deterministic and alpha = 0 ignores the teacher") {
  const auto c = tiny_memory();
  const auto data = prepare_memory_data(c.memory, {TeacherMode::oracle, TeacherMode::noise});
  const auto a = train_memory_run(c, {0.0, TeacherMode::oracle, 7}, data);
  const auto b = train_memory_run(c, {0.0, TeacherMode::noise, 7}, data);
  const auto none = train_memory_run(c, {0.0, TeacherMode::none, 7}, data);
  CHECK(a.history.size() == 3);
  CHECK(same_history(a, b));
  CHECK(same_history(a, none));

  const auto t1 = train_memory_run(c, {0.1, TeacherMode::oracle, 7}, data);
  const auto t2 = train_memory_run(c, {0.1, TeacherMode::oracle, 7}, data);
  CHECK(same_history(t1, t2));
  CHECK_FALSE(same_history(t1, a));
  CHECK(t1.final_metric >= 0.0);
  CHECK(t1.final_metric <= 1.0);

  const auto back = RunResult::from_json(t1.to_json());
  CHECK(back.run_id == t1.run_id);
  CHECK(back.fingerprint == t1.fingerprint);
  CHECK(back.spec.teacher == TeacherMode::oracle);
  CHECK(same_history(back, t1));
}

TEST_CASE("scene runs are deterministic and alpha = 0 ignores the teacher") {
  const auto c = tiny_scene();
  const auto data = prepare_scene_data(c.scene);
  CHECK(data.eeg_teacher.size() == 40 * 8);
  const auto a = train_scene_run(c, {0.0, TeacherMode::oracle, 2}, data);
  const auto b = train_scene_run(c, {0.0, TeacherMode::noise, 2}, data);
  CHECK(same_history(a, b));
  const auto t1 = train_scene_run(c, {0.1, TeacherMode::noise, 2}, data);
  const auto t2 = train_scene_run(c, {0.1, TeacherMode::noise, 2}, data);
  CHECK(same_history(t1, t2));
  CHECK(t1.final_metric > 0.0);
  CHECK_FALSE(t1.diverged);
}
