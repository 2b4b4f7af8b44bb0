#include "b2m/losses.hpp"

#include <cmath>

#include "b2m/error.hpp"

namespace b2m {

namespace {

void require_finite(const char* op, const ad::Tensor& t) {
  auto v = t.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw DomainError(std::string(op) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

void require_paired(const char* op, const EmbeddingBatch& a, const EmbeddingBatch& b) {
  if (a.values.shape().size() != 2 || b.values.shape().size() != 2) {
    throw ShapeError(std::string(op) + ": embeddings must be 2-D, got " +
                     ad::shape_str(a.values.shape()) + " and " + ad::shape_str(b.values.shape()));
  }
  if (a.batch() == 0 || a.dims() == 0) {
    throw ShapeError(std::string(op) + ": empty embedding batch");
  }
  if (a.values.shape() != b.values.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + ad::shape_str(a.values.shape()) +
                     " vs " + ad::shape_str(b.values.shape()));
  }
  if (!a.ids.empty() && !b.ids.empty() && a.ids != b.ids) {
    throw ShapeError(std::string(op) + ": example ids of the two batches are not aligned");
  }
  require_finite(op, a.values);
  require_finite(op, b.values);
}

}  // namespace

EmbeddingBatch EmbeddingBatch::teacher(std::size_t rows, std::size_t dims,
                                       std::vector<double> data,
                                       std::vector<std::int64_t> ids) {
  if (!ids.empty() && ids.size() != rows) {
    throw ShapeError("EmbeddingBatch: " + std::to_string(ids.size()) + " ids for " +
                     std::to_string(rows) + " rows");
  }
  return {ad::Tensor::constant({rows, dims}, std::move(data)), EmbeddingSource::teacher,
          std::move(ids)};
}

EmbeddingBatch EmbeddingBatch::model(ad::Tensor values, std::vector<std::int64_t> ids) {
  if (!ids.empty() && ids.size() != values.rows()) {
    throw ShapeError("EmbeddingBatch: " + std::to_string(ids.size()) + " ids for " +
                     std::to_string(values.rows()) + " rows");
  }
  return {std::move(values), EmbeddingSource::model, std::move(ids)};
}

std::string to_string(TransferMode mode) {
  switch (mode) {
    case TransferMode::contrastive: return "contrastive";
    case TransferMode::latent: return "latent";
    case TransferMode::none: return "none";
    case TransferMode::noise_control: return "noise-control";
  }
  return "none";
}

TransferMode transfer_mode_from_string(const std::string& name) {
  if (name == "contrastive") return TransferMode::contrastive;
  if (name == "latent") return TransferMode::latent;
  if (name == "none") return TransferMode::none;
  if (name == "noise-control") return TransferMode::noise_control;
  throw ConfigError("unknown transfer mode '" + name + "'");
}

void TransferConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0, got " + std::to_string(tau));
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
}

ad::Tensor contrastive_transfer_loss(const EmbeddingBatch& teacher, const EmbeddingBatch& model,
                                     double tau) {
  if (!(tau > 0.0)) throw ConfigError("contrastive_transfer_loss: tau must be > 0");
  require_paired("contrastive_transfer_loss", teacher, model);
  // Teacher rows are anchors; the teacher side is held constant.
  const ad::Tensor anchors = teacher.values.detach();
  const ad::Tensor sim = ad::scale(ad::matmul(anchors, ad::transpose(model.values)), 1.0 / tau);
  return ad::sum(ad::sub(ad::logsumexp_rows(sim), ad::diagonal(sim)));
}

ad::Tensor latent_transfer_loss(const EmbeddingBatch& model, const EmbeddingBatch& teacher) {
  require_paired("latent_transfer_loss", model, teacher);
  const ad::Tensor diff = ad::sub(model.values, teacher.values);
  return ad::mean(ad::mul(diff, diff));
}

ad::Tensor combined_loss(const ad::Tensor& task, const ad::Tensor& transfer, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("combined_loss: alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  if (task.size() != 1 || (transfer.defined() && transfer.size() != 1)) {
    throw ShapeError("combined_loss: task and transfer losses must be scalars");
  }
  if (alpha == 0.0) return task;
  if (!transfer.defined()) throw ShapeError("combined_loss: transfer loss missing for alpha > 0");
  if (alpha == 1.0) return transfer;
  return ad::add(ad::scale(task, 1.0 - alpha), ad::scale(transfer, alpha));
}

ad::Tensor task_loss_sequence(const ad::Tensor& pred, std::span<const int> targets) {
  if (pred.size() != targets.size() || targets.empty()) {
    throw ShapeError("task_loss_sequence: " + std::to_string(pred.size()) + " predictions vs " +
                     std::to_string(targets.size()) + " targets");
  }
  std::vector<double> signed_targets(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] != 1 && targets[i] != -1) {
      throw DomainError("task_loss_sequence: label " + std::to_string(targets[i]) +
                        " at step " + std::to_string(i) + " is not +-1");
    }
    signed_targets[i] = targets[i];
  }
  const ad::Tensor diff =
      ad::sub(pred, ad::Tensor::constant(pred.shape(), std::move(signed_targets)));
  return ad::mean(ad::mul(diff, diff));
}

VaeLoss vae_loss(const ad::Tensor& recon, const ad::Tensor& target, const ad::Tensor& mu,
                 const ad::Tensor& logvar, double beta) {
  if (recon.shape() != target.shape()) {
    throw ShapeError("vae_loss: recon " + ad::shape_str(recon.shape()) + " vs target " +
                     ad::shape_str(target.shape()));
  }
  if (mu.shape() != logvar.shape()) {
    throw ShapeError("vae_loss: mu " + ad::shape_str(mu.shape()) + " vs logvar " +
                     ad::shape_str(logvar.shape()));
  }
  const ad::Tensor diff = ad::sub(recon, target);
  ad::Tensor rec = ad::mean(ad::mul(diff, diff));
  // 0.5 * (mu^2 + e^logvar - 1 - logvar), summed over dims, mean over rows.
  const ad::Tensor terms =
      ad::sub(ad::add(ad::mul(mu, mu), ad::exp(logvar)), ad::add_scalar(logvar, 1.0));
  const double rows = static_cast<double>(mu.rows());
  ad::Tensor kl = ad::scale(ad::sum(terms), 0.5 / rows);
  ad::Tensor total = beta == 0.0 ? rec : ad::add(rec, ad::scale(kl, beta));
  return {total, rec, kl};
}

}  // namespace b2m
