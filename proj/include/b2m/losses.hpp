#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "b2m/autodiff.hpp"

namespace b2m {

enum class EmbeddingSource { model, teacher };

/// b x E embeddings plus the example ids they belong to. Teacher batches are
/// always untracked constants; model batches carry the student's graph.
struct EmbeddingBatch {
  ad::Tensor values;
  EmbeddingSource source = EmbeddingSource::model;
  std::vector<std::int64_t> ids;

  std::size_t batch() const { return values.rows(); }
  std::size_t dims() const { return values.cols(); }

  static EmbeddingBatch teacher(std::size_t rows, std::size_t dims, std::vector<double> data,
                                std::vector<std::int64_t> ids = {});
  static EmbeddingBatch model(ad::Tensor values, std::vector<std::int64_t> ids = {});
};

enum class TransferMode { contrastive, latent, none, noise_control };

std::string to_string(TransferMode mode);
TransferMode transfer_mode_from_string(const std::string& name);

struct TransferConfig {
  double alpha = 0.0;
  double tau = 0.1;
  TransferMode mode = TransferMode::none;

  /// Throws ConfigError unless tau > 0 and alpha is in [0, 1].
  void validate() const;
};

/// Sum over teacher anchors i of -log softmax_j(S)_ii, S = teacher * model^T / tau.
/// Gradients flow only into `model`.
ad::Tensor contrastive_transfer_loss(const EmbeddingBatch& teacher, const EmbeddingBatch& model,
                                     double tau);

/// Mean squared error over the E dims, averaged over rows.
ad::Tensor latent_transfer_loss(const EmbeddingBatch& model, const EmbeddingBatch& teacher);

/// (1 - alpha) * task + alpha * transfer. alpha == 0 returns `task` itself
/// so the transfer graph is never touched.
ad::Tensor combined_loss(const ad::Tensor& task, const ad::Tensor& transfer, double alpha);

/// Mean squared error of predictions against +-1 targets.
ad::Tensor task_loss_sequence(const ad::Tensor& pred, std::span<const int> targets);

struct VaeLoss {
  ad::Tensor total;
  ad::Tensor reconstruction;
  ad::Tensor kl;
};

/// Reconstruction MSE (mean over all pixels) plus beta times the diagonal
/// Gaussian KL to N(0, I), summed over latent dims and averaged over rows.
VaeLoss vae_loss(const ad::Tensor& recon, const ad::Tensor& target, const ad::Tensor& mu,
                 const ad::Tensor& logvar, double beta);

}  // namespace b2m
