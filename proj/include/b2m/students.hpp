#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "b2m/autodiff.hpp"
#include "b2m/losses.hpp"
#include "b2m/memory_task.hpp"
#include "b2m/rng.hpp"

namespace b2m {

struct NamedParam {
  std::string name;
  ad::Tensor tensor;
};

enum class Mode { train, eval };

// ---------------------------------------------------------------------------
// GRU sequence student

struct GruStudentConfig {
  std::size_t input_size = 4;
  std::size_t hidden_size = 64;
  double dropout_rate = 0.3;
  std::size_t embedding_dim = 7;
  double output_range = 1.5;
  double tau = 0.1;

  void validate() const;
};

struct GruOutput {
  ad::Tensor predictions;  // steps x 1, in (-output_range, output_range)
  ad::Tensor embeddings;   // steps x embedding_dim
};

/// Single-layer GRU -> dropout -> linear embedding (FC1) -> linear scalar
/// output (FC2) -> 2 * range * sigmoid - range.
class GruStudent {
 public:
  GruStudent(const GruStudentConfig& config, Rng& init_rng);
  static GruStudent zeros(const GruStudentConfig& config);

  const GruStudentConfig& config() const { return config_; }
  std::vector<NamedParam> parameters() const;
  std::vector<ad::Tensor> parameter_tensors() const;

  /// `one_hot` is steps x input_size, each row a one-hot vector. Dropout is
  /// applied only in train mode and then needs `dropout_rng`.
  GruOutput forward(std::span<const double> one_hot, std::size_t steps, Mode mode,
                    Rng* dropout_rng = nullptr) const;

 private:
  explicit GruStudent(const GruStudentConfig& config);

  GruStudentConfig config_;
  ad::Tensor w_update_, w_reset_, w_candidate_;  // input_size x H
  ad::Tensor u_update_, u_reset_, u_candidate_;  // H x H
  ad::Tensor b_update_, b_reset_, b_candidate_;  // 1 x H
  ad::Tensor w_embed_, b_embed_;                 // H x E, 1 x E
  ad::Tensor w_out_, b_out_;                     // E x 1, 1 x 1
};

/// Context step (initial target one-hot) followed by one row per stimulus;
/// (length + 1) x 4.
std::vector<double> encode_episode(const memory::Episode& episode);

/// Step embeddings without the context row, ids = step index.
EmbeddingBatch gru_transfer_embeddings(const GruOutput& output, std::size_t episode_steps);

/// Predictions for the episode steps (context row dropped), steps x 1.
ad::Tensor gru_step_predictions(const GruOutput& output, std::size_t episode_steps);

// ---------------------------------------------------------------------------
// VAE scene student

struct VaeStudentConfig {
  std::size_t input_dim = 32 * 16;
  std::vector<std::size_t> encoder_widths{128};
  std::vector<std::size_t> decoder_widths{128};
  std::size_t embedding_dim = 64;
  double beta = 1e-3;
  double leaky_slope = 0.01;

  void validate() const;
};

struct VaeOutput {
  ad::Tensor reconstruction;  // batch x input_dim, in (0, 1)
  ad::Tensor mu;              // batch x embedding_dim
  ad::Tensor logvar;
  ad::Tensor z;
};

/// Dense encoder -> (mu, logvar) -> reparameterised z -> dense decoder ->
/// sigmoid. Hidden layers use leaky ReLU.
class VaeStudent {
 public:
  VaeStudent(const VaeStudentConfig& config, Rng& init_rng);

  const VaeStudentConfig& config() const { return config_; }
  std::vector<NamedParam> parameters() const;
  std::vector<ad::Tensor> parameter_tensors() const;

  /// Train mode samples eps ~ N(0, 1) from `eps_rng`; eval mode uses z = mu.
  VaeOutput forward(const ad::Tensor& images, Mode mode, Rng* eps_rng = nullptr) const;
  /// Encoder mean only.
  ad::Tensor encode_mu(const ad::Tensor& images) const;

 private:
  struct Layer {
    ad::Tensor weight;  // in x out
    ad::Tensor bias;    // 1 x out
  };
  static Layer make_layer(std::size_t in, std::size_t out, Rng& rng);
  ad::Tensor encode_hidden(const ad::Tensor& images) const;

  VaeStudentConfig config_;
  std::vector<Layer> encoder_;
  Layer mu_head_, logvar_head_;
  std::vector<Layer> decoder_;
  Layer output_;
};

/// Row-major batch of images as an untracked tensor.
ad::Tensor image_batch(std::span<const double> pixels, std::size_t rows, std::size_t dim);

}  // namespace b2m
