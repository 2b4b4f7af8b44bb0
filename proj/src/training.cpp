#include "b2m/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "b2m/adam.hpp"
#include "b2m/error.hpp"
#include "b2m/losses.hpp"
#include "b2m/spikes.hpp"

namespace b2m {

namespace {

// Substream ids. Data streams hang off data_seed, run streams off the run seed.
enum Stream : std::uint64_t {
  kInit = 1,
  kDropout = 2,
  kShuffle = 3,
  kTransferShuffle = 4,
  kTrainEpisodes = 100,
  kTestEpisodes = 101,
  kOracleMap = 102,
  kOracleNoise = 103,
  kNoiseTeacher = 104,
  kSpikeReadout = 105,
  kSpikeSim = 106,
  kSceneTrain = 200,
  kSceneTest = 201,
  kSceneHuman = 202,
  kEegMap = 203,
  kEegNoise = 204,
  kSceneNoiseTeacher = 205,
};

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

bool uses_transfer(const RunSpec& spec) {
  return spec.alpha > 0.0 && spec.teacher != TeacherMode::none;
}

void finish(RunResult& result, std::chrono::steady_clock::time_point start) {
  if (!result.history.empty()) result.final_metric = result.history.back().test_metric;
  if (!result.diverged) {
    std::vector<double> losses;
    for (const auto& e : result.history) losses.push_back(e.test_loss);
    if (!losses.empty() && detect_divergence(losses)) {
      result.diverged = true;
      result.divergence_reason = "test-loss-above-1";
    }
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

RunResult start_result(const ExperimentConfig& config, const RunSpec& spec) {
  RunResult r;
  r.task = config.task;
  r.spec = spec;
  r.fingerprint = run_fingerprint(config, spec);
  r.run_id = run_id(config, spec);
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

nlohmann::json RunResult::to_json() const {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& e : history) {
    hist.push_back({{"epoch", e.epoch},
                    {"train_loss", e.train_loss},
                    {"test_metric", e.test_metric},
                    {"test_loss", e.test_loss}});
  }
  return {{"run_id", run_id},
          {"task", to_string(task)},
          {"alpha", spec.alpha},
          {"teacher", to_string(spec.teacher)},
          {"seed", spec.seed},
          {"history", std::move(hist)},
          {"final_metric", final_metric},
          {"diverged", diverged},
          {"divergence_reason", divergence_reason},
          {"wall_seconds", wall_seconds},
          {"fingerprint", fingerprint}};
}

RunResult RunResult::from_json(const nlohmann::json& j) {
  try {
    RunResult r;
    r.run_id = j.at("run_id").get<std::string>();
    r.task = j.at("task").get<std::string>() == "memory" ? TaskKind::memory : TaskKind::scene;
    r.spec.alpha = j.at("alpha").get<double>();
    r.spec.teacher = teacher_mode_from_string(j.at("teacher").get<std::string>());
    r.spec.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("history")) {
      r.history.push_back({e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(),
                           e.at("test_metric").get<double>(), e.at("test_loss").get<double>()});
    }
    r.final_metric = j.at("final_metric").get<double>();
    r.diverged = j.at("diverged").get<bool>();
    r.divergence_reason = j.value("divergence_reason", "");
    r.wall_seconds = j.value("wall_seconds", 0.0);
    r.fingerprint = j.value("fingerprint", "");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run result: ") + e.what());
  }
}

std::string run_fingerprint(const ExperimentConfig& config, const RunSpec& spec) {
  ExperimentConfig cell = config;
  cell.alphas = {spec.alpha};
  cell.teachers = {spec.alpha == 0.0 ? TeacherMode::none : spec.teacher};
  cell.seeds = {0};
  return cell.fingerprint();
}

std::string run_id(const ExperimentConfig& config, const RunSpec& spec) {
  char alpha[32];
  std::snprintf(alpha, sizeof alpha, "%.4f", spec.alpha);
  return to_string(config.task) + "-a" + alpha + "-" + to_string(spec.teacher) + "-s" +
         std::to_string(spec.seed);
}

bool detect_divergence(const std::vector<double>& test_losses) {
  if (test_losses.empty()) return false;
  const bool exceeded = std::any_of(test_losses.begin(), test_losses.end(),
                                    [](double l) { return !(l <= 1.0); });
  return exceeded && !(test_losses.back() <= 1.0);
}

std::size_t epochs_to_convergence(const std::vector<double>& metric, bool higher_is_better) {
  if (metric.empty()) return 0;
  const double final = metric.back();
  for (std::size_t i = 0; i < metric.size(); ++i) {
    const bool reached = higher_is_better ? metric[i] >= 0.95 * final : metric[i] <= final / 0.95;
    if (reached) return i + 1;
  }
  return metric.size();
}

// ---------------------------------------------------------------------------
// Memory task

const std::vector<memory::TeacherEmbeddingSet>& MemoryData::teacher(TeacherMode mode) const {
  switch (mode) {
    case TeacherMode::oracle:
      if (oracle_teacher.empty()) break;
      return oracle_teacher;
    case TeacherMode::spike_pca:
      if (spike_teacher.empty()) break;
      return spike_teacher;
    case TeacherMode::noise:
      if (noise_teacher.empty()) break;
      return noise_teacher;
    case TeacherMode::none: break;
  }
  throw ConfigError("memory data has no '" + to_string(mode) + "' teacher rows");
}

MemoryData prepare_memory_data(const MemoryTaskConfig& config,
                               const std::vector<TeacherMode>& teachers) {
  const std::uint64_t seed = config.data_seed;
  MemoryData d;
  Rng train_rng = Rng::derive(seed, kTrainEpisodes);
  for (std::size_t i = 0; i < config.train_sequences; ++i) {
    d.train.push_back(memory::generate_episode(train_rng, config.train_length,
                                               static_cast<std::int64_t>(i)));
  }
  Rng test_rng = Rng::derive(seed, kTestEpisodes);
  for (std::size_t i = 0; i < config.test_sequences; ++i) {
    d.test.push_back(memory::generate_episode(test_rng, config.test_length,
                                              static_cast<std::int64_t>(i)));
  }
  for (const auto& ep : d.train) {
    d.train_inputs.push_back(encode_episode(ep));
    d.train_targets.push_back(memory::signed_targets(memory::rollout(ep)));
  }
  for (const auto& ep : d.test) {
    d.test_inputs.push_back(encode_episode(ep));
    d.test_targets.push_back(memory::signed_targets(memory::rollout(ep)));
  }
  const std::size_t dims = config.model.embedding_dim;
  auto wants = [&](TeacherMode m) {
    return std::find(teachers.begin(), teachers.end(), m) != teachers.end();
  };
  if (wants(TeacherMode::oracle)) {
    Rng map_rng = Rng::derive(seed, kOracleMap);
    Rng noise_rng = Rng::derive(seed, kOracleNoise);
    const auto oracle = memory::OracleTeacher::random(map_rng, config.teacher_sigma, dims);
    for (const auto& ep : d.train) d.oracle_teacher.push_back(oracle.embed(ep, noise_rng));
  }
  if (wants(TeacherMode::noise)) {
    Rng noise_rng = Rng::derive(seed, kNoiseTeacher);
    for (const auto& ep : d.train) {
      d.noise_teacher.push_back(memory::noise_teacher(ep.length(), dims, noise_rng, ep.id));
    }
  }
  if (wants(TeacherMode::spike_pca)) {
    Rng readout_rng = Rng::derive(seed, kSpikeReadout);
    Rng sim_rng = Rng::derive(seed, kSpikeSim);
    const auto readout = memory::SpikeReadout::random(config.spike_neurons, readout_rng);
    std::vector<memory::SpikeTrace> traces;
    traces.reserve(d.train.size());
    for (const auto& ep : d.train) traces.push_back(memory::simulate_spikes(ep, readout, sim_rng));
    const auto teacher = memory::SpikePcaTeacher::fit(traces, dims);
    for (std::size_t i = 0; i < traces.size(); ++i) {
      d.spike_teacher.push_back(teacher.embed(traces[i], d.train[i].id));
    }
  }
  return d;
}

MemoryEval evaluate_memory(const GruStudent& model, const MemoryData& data) {
  ad::NoGradGuard no_grad;
  std::size_t correct = 0, total = 0;
  double sq = 0.0;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    const std::size_t steps = data.test[i].length();
    const auto out = model.forward(data.test_inputs[i], steps + 1, Mode::eval);
    const auto pred = out.predictions.values();
    const auto& targets = data.test_targets[i];
    for (std::size_t t = 0; t < steps; ++t) {
      const double p = pred[t + 1];
      const int sign = p > 0.0 ? 1 : (p < 0.0 ? -1 : 0);
      if (sign == targets[t]) ++correct;
      sq += (p - targets[t]) * (p - targets[t]);
      ++total;
    }
  }
  return {static_cast<double>(correct) / static_cast<double>(total),
          sq / static_cast<double>(total)};
}

RunResult train_memory_run(const ExperimentConfig& config, const RunSpec& spec,
                           const MemoryData& data, std::optional<GruStudent>* trained) {
  if (config.task != TaskKind::memory) throw ConfigError("train_memory_run: task is not memory");
  TransferConfig{spec.alpha, config.memory.model.tau, TransferMode::contrastive}.validate();
  const auto start = std::chrono::steady_clock::now();
  RunResult result = start_result(config, spec);

  const bool transfer = uses_transfer(spec);
  const std::vector<memory::TeacherEmbeddingSet>* teacher = nullptr;
  if (transfer) {
    teacher = &data.teacher(spec.teacher);
    if (teacher->size() != data.train.size()) {
      throw ShapeError("train_memory_run: teacher rows missing for some training sequences");
    }
  }

  Rng init_rng = Rng::derive(spec.seed, kInit);
  Rng dropout_rng = Rng::derive(spec.seed, kDropout);
  Rng shuffle_rng = Rng::derive(spec.seed, kShuffle);
  GruStudent model(config.memory.model, init_rng);
  Adam adam(model.parameter_tensors(), AdamHyper{config.learning_rate});

  for (std::size_t epoch = 1; epoch <= config.epochs && !result.diverged; ++epoch) {
    double loss_sum = 0.0;
    for (std::size_t idx : shuffled(data.train.size(), shuffle_rng)) {
      const std::size_t steps = data.train[idx].length();
      const auto out = model.forward(data.train_inputs[idx], steps + 1, Mode::train, &dropout_rng);
      const ad::Tensor task = task_loss_sequence(gru_step_predictions(out, steps),
                                                 data.train_targets[idx]);
      ad::Tensor transfer_loss;
      if (transfer) {
        transfer_loss = contrastive_transfer_loss((*teacher)[idx].batch(),
                                                  gru_transfer_embeddings(out, steps),
                                                  config.memory.model.tau);
      }
      const ad::Tensor loss = transfer ? combined_loss(task, transfer_loss, spec.alpha) : task;
      if (!std::isfinite(loss.item())) {
        result.diverged = true;
        result.divergence_reason = "non-finite-loss";
        break;
      }
      ad::backward(loss);
      adam.step();
      loss_sum += loss.item();
    }
    if (result.diverged) break;
    const MemoryEval eval = evaluate_memory(model, data);
    result.history.push_back({epoch, loss_sum / static_cast<double>(data.train.size()),
                              eval.accuracy, eval.mse});
  }
  finish(result, start);
  if (trained) trained->emplace(std::move(model));
  return result;
}

// ---------------------------------------------------------------------------
// Scene task

const std::vector<double>& SceneData::teacher(TeacherMode mode) const {
  if (mode == TeacherMode::oracle) return eeg_teacher;
  if (mode == TeacherMode::noise) return noise_teacher;
  throw ConfigError("scene data has no '" + to_string(mode) + "' teacher");
}

SceneData prepare_scene_data(const SceneTaskConfig& config) {
  const std::uint64_t seed = config.data_seed;
  SceneData d;
  Rng train_rng = Rng::derive(seed, kSceneTrain);
  Rng test_rng = Rng::derive(seed, kSceneTest);
  Rng human_rng = Rng::derive(seed, kSceneHuman);
  d.train = scene::sample_dataset(train_rng, config.train_scenes, scene::Split::artificial, config.dims);
  d.test = scene::sample_dataset(test_rng, config.test_scenes, scene::Split::artificial, config.dims);
  d.human = scene::sample_dataset(human_rng, config.human_scenes, scene::Split::human, config.dims);
  Rng map_rng = Rng::derive(seed, kEegMap);
  Rng noise_rng = Rng::derive(seed, kEegNoise);
  scene::EegTeacher eeg(config.model.embedding_dim, map_rng, config.teacher_sigma);
  d.eeg_teacher = scene::eeg_teacher_vectors(eeg, d.human, noise_rng);
  Rng gauss_rng = Rng::derive(seed, kSceneNoiseTeacher);
  d.noise_teacher.resize(d.eeg_teacher.size());
  for (auto& v : d.noise_teacher) v = gauss_rng.normal();
  return d;
}

double evaluate_scene(const VaeStudent& model, const scene::SceneDataset& test) {
  ad::NoGradGuard no_grad;
  const std::size_t dim = test.dims.pixels();
  constexpr std::size_t kChunk = 200;
  double sq = 0.0;
  for (std::size_t begin = 0; begin < test.size(); begin += kChunk) {
    const std::size_t rows = std::min(kChunk, test.size() - begin);
    const auto pixels = std::span<const double>(test.pixels).subspan(begin * dim, rows * dim);
    const auto out = model.forward(ad::Tensor::constant({rows, dim}, {pixels.begin(), pixels.end()}),
                                   Mode::eval);
    const auto recon = out.reconstruction.values();
    for (std::size_t i = 0; i < recon.size(); ++i) sq += (recon[i] - pixels[i]) * (recon[i] - pixels[i]);
  }
  return sq / static_cast<double>(test.size() * dim);
}

RunResult train_scene_run(const ExperimentConfig& config, const RunSpec& spec,
                          const SceneData& data, std::optional<VaeStudent>* trained) {
  if (config.task != TaskKind::scene) throw ConfigError("train_scene_run: task is not scene");
  TransferConfig{spec.alpha, 1.0, TransferMode::latent}.validate();
  const auto& sc = config.scene;
  const std::size_t dim = sc.dims.pixels();
  const std::size_t emb = sc.model.embedding_dim;
  const auto start = std::chrono::steady_clock::now();
  RunResult result = start_result(config, spec);

  const bool transfer = uses_transfer(spec);
  const std::vector<double>* teacher = nullptr;
  if (transfer) {
    teacher = &data.teacher(spec.teacher);
    if (teacher->size() != data.human.size() * emb) {
      throw ShapeError("train_scene_run: teacher dims do not match the VAE embedding");
    }
  }

  Rng init_rng = Rng::derive(spec.seed, kInit);
  Rng eps_rng = Rng::derive(spec.seed, kDropout);
  Rng shuffle_rng = Rng::derive(spec.seed, kShuffle);
  Rng transfer_rng = Rng::derive(spec.seed, kTransferShuffle);
  VaeStudent model(sc.model, init_rng);
  Adam adam(model.parameter_tensors(), AdamHyper{config.learning_rate});

  std::vector<std::size_t> human_order;
  std::size_t human_cursor = 0;
  auto next_human_batch = [&]() {
    std::vector<std::size_t> batch;
    const std::size_t want = std::min(sc.transfer_batch, data.human.size());
    while (batch.size() < want) {
      if (human_cursor == human_order.size()) {
        human_order = shuffled(data.human.size(), transfer_rng);
        human_cursor = 0;
      }
      batch.push_back(human_order[human_cursor++]);
    }
    return batch;
  };

  std::vector<double> pixels;
  std::vector<double> targets;
  for (std::size_t epoch = 1; epoch <= config.epochs && !result.diverged; ++epoch) {
    const auto order = shuffled(data.train.size(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += sc.task_batch) {
      const std::size_t rows = std::min(sc.task_batch, order.size() - begin);
      pixels.clear();
      for (std::size_t k = 0; k < rows; ++k) {
        const auto img = data.train.image(order[begin + k]);
        pixels.insert(pixels.end(), img.begin(), img.end());
      }
      const ad::Tensor images = ad::Tensor::constant({rows, dim}, pixels);
      const VaeOutput out = model.forward(images, Mode::train, &eps_rng);
      const VaeLoss task = vae_loss(out.reconstruction, images, out.mu, out.logvar, sc.model.beta);

      ad::Tensor transfer_loss;
      if (transfer) {
        const auto batch = next_human_batch();
        pixels.clear();
        targets.clear();
        for (std::size_t idx : batch) {
          const auto img = data.human.image(idx);
          pixels.insert(pixels.end(), img.begin(), img.end());
          targets.insert(targets.end(), teacher->begin() + static_cast<std::ptrdiff_t>(idx * emb),
                         teacher->begin() + static_cast<std::ptrdiff_t>((idx + 1) * emb));
        }
        const ad::Tensor human = ad::Tensor::constant({batch.size(), dim}, pixels);
        transfer_loss = latent_transfer_loss(
            EmbeddingBatch::model(model.encode_mu(human)),
            EmbeddingBatch::teacher(batch.size(), emb, targets));
      }
      const ad::Tensor loss =
          transfer ? combined_loss(task.total, transfer_loss, spec.alpha) : task.total;
      if (!std::isfinite(loss.item())) {
        result.diverged = true;
        result.divergence_reason = "non-finite-loss";
        break;
      }
      ad::backward(loss);
      adam.step();
      loss_sum += loss.item();
      ++batches;
    }
    if (result.diverged) break;
    const double mse = evaluate_scene(model, data.test);
    result.history.push_back({epoch, loss_sum / static_cast<double>(batches), mse, mse});
  }
  finish(result, start);
  if (trained) trained->emplace(std::move(model));
  return result;
}

}  // namespace b2m
