#include "b2m/students.hpp"

#include <cmath>

#include "b2m/error.hpp"

namespace b2m {

namespace {

ad::Tensor uniform_param(ad::Shape shape, double bound, Rng& rng) {
  std::vector<double> v(ad::numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return ad::Tensor::parameter(std::move(shape), std::move(v));
}

ad::Tensor zero_param(ad::Shape shape) {
  const std::size_t n = ad::numel(shape);
  return ad::Tensor::parameter(std::move(shape), std::vector<double>(n, 0.0));
}

}  // namespace

// ---------------------------------------------------------------------------
// GRU

void GruStudentConfig::validate() const {
  if (input_size == 0 || hidden_size == 0 || embedding_dim == 0) {
    throw ConfigError("gru: input_size, hidden_size and embedding_dim must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("gru: dropout_rate must lie in [0, 1)");
  }
  if (!(output_range > 0.0)) throw ConfigError("gru: output_range must be > 0");
  if (!(tau > 0.0)) throw ConfigError("gru: tau must be > 0");
}

GruStudent::GruStudent(const GruStudentConfig& config) : config_(config) { config_.validate(); }

GruStudent::GruStudent(const GruStudentConfig& config, Rng& init_rng) : GruStudent(config) {
  const std::size_t in = config_.input_size, h = config_.hidden_size, e = config_.embedding_dim;
  const double gru_bound = 1.0 / std::sqrt(static_cast<double>(h));
  const double out_bound = 1.0 / std::sqrt(static_cast<double>(e));
  w_update_ = uniform_param({in, h}, gru_bound, init_rng);
  w_reset_ = uniform_param({in, h}, gru_bound, init_rng);
  w_candidate_ = uniform_param({in, h}, gru_bound, init_rng);
  u_update_ = uniform_param({h, h}, gru_bound, init_rng);
  u_reset_ = uniform_param({h, h}, gru_bound, init_rng);
  u_candidate_ = uniform_param({h, h}, gru_bound, init_rng);
  b_update_ = uniform_param({1, h}, gru_bound, init_rng);
  b_reset_ = uniform_param({1, h}, gru_bound, init_rng);
  b_candidate_ = uniform_param({1, h}, gru_bound, init_rng);
  w_embed_ = uniform_param({h, e}, gru_bound, init_rng);
  b_embed_ = uniform_param({1, e}, gru_bound, init_rng);
  w_out_ = uniform_param({e, 1}, out_bound, init_rng);
  b_out_ = uniform_param({1, 1}, out_bound, init_rng);
}

GruStudent GruStudent::zeros(const GruStudentConfig& config) {
  GruStudent s(config);
  const std::size_t in = config.input_size, h = config.hidden_size, e = config.embedding_dim;
  s.w_update_ = zero_param({in, h});
  s.w_reset_ = zero_param({in, h});
  s.w_candidate_ = zero_param({in, h});
  s.u_update_ = zero_param({h, h});
  s.u_reset_ = zero_param({h, h});
  s.u_candidate_ = zero_param({h, h});
  s.b_update_ = zero_param({1, h});
  s.b_reset_ = zero_param({1, h});
  s.b_candidate_ = zero_param({1, h});
  s.w_embed_ = zero_param({h, e});
  s.b_embed_ = zero_param({1, e});
  s.w_out_ = zero_param({e, 1});
  s.b_out_ = zero_param({1, 1});
  return s;
}

std::vector<NamedParam> GruStudent::parameters() const {
  return {{"gru.w_update", w_update_},       {"gru.w_reset", w_reset_},
          {"gru.w_candidate", w_candidate_}, {"gru.u_update", u_update_},
          {"gru.u_reset", u_reset_},         {"gru.u_candidate", u_candidate_},
          {"gru.b_update", b_update_},       {"gru.b_reset", b_reset_},
          {"gru.b_candidate", b_candidate_}, {"embed.weight", w_embed_},
          {"embed.bias", b_embed_},          {"out.weight", w_out_},
          {"out.bias", b_out_}};
}

std::vector<ad::Tensor> GruStudent::parameter_tensors() const {
  std::vector<ad::Tensor> out;
  for (auto& p : parameters()) out.push_back(p.tensor);
  return out;
}

GruOutput GruStudent::forward(std::span<const double> one_hot, std::size_t steps, Mode mode,
                              Rng* dropout_rng) const {
  const std::size_t in = config_.input_size, h = config_.hidden_size;
  if (steps == 0 || one_hot.size() != steps * in) {
    throw ShapeError("gru forward: expected " + std::to_string(steps) + " x " +
                     std::to_string(in) + " inputs, got " + std::to_string(one_hot.size()) +
                     " values");
  }
  for (std::size_t t = 0; t < steps; ++t) {
    int ones = 0;
    for (std::size_t k = 0; k < in; ++k) {
      const double v = one_hot[t * in + k];
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        ones = -1;
        break;
      }
    }
    if (ones != 1) {
      throw DomainError("gru forward: input row " + std::to_string(t) + " is not one-hot");
    }
  }
  const bool training = mode == Mode::train && config_.dropout_rate > 0.0;
  if (training && dropout_rng == nullptr) {
    throw ConfigError("gru forward: train mode with dropout needs an rng");
  }

  // Input projections for all steps at once.
  const ad::Tensor x = ad::Tensor::constant({steps, in}, {one_hot.begin(), one_hot.end()});
  const ad::Tensor xz = ad::add_rowwise(ad::matmul(x, w_update_), b_update_);
  const ad::Tensor xr = ad::add_rowwise(ad::matmul(x, w_reset_), b_reset_);
  const ad::Tensor xh = ad::add_rowwise(ad::matmul(x, w_candidate_), b_candidate_);

  ad::Tensor state = ad::Tensor::constant({1, h}, 0.0);
  std::vector<ad::Tensor> states;
  states.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const ad::Tensor z =
        ad::sigmoid(ad::add(ad::slice(xz, 0, t, t + 1), ad::matmul(state, u_update_)));
    const ad::Tensor r =
        ad::sigmoid(ad::add(ad::slice(xr, 0, t, t + 1), ad::matmul(state, u_reset_)));
    const ad::Tensor candidate = ad::tanh(
        ad::add(ad::slice(xh, 0, t, t + 1), ad::matmul(ad::mul(r, state), u_candidate_)));
    // h' = (1 - z) * h + z * candidate
    state = ad::add(state, ad::mul(z, ad::sub(candidate, state)));
    states.push_back(state);
  }
  ad::Tensor hidden = ad::concat(states, 0);
  if (training) {
    const double keep = 1.0 - config_.dropout_rate;
    std::vector<double> mask(hidden.size());
    for (auto& m : mask) m = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
    hidden = ad::mul_constant(hidden, mask);
  }
  ad::Tensor embeddings = ad::add_rowwise(ad::matmul(hidden, w_embed_), b_embed_);
  const ad::Tensor logits = ad::add_rowwise(ad::matmul(embeddings, w_out_), b_out_);
  const double range = config_.output_range;
  ad::Tensor predictions = ad::add_scalar(ad::scale(ad::sigmoid(logits), 2.0 * range), -range);
  return {predictions, embeddings};
}

std::vector<double> encode_episode(const memory::Episode& episode) {
  episode.validate();
  constexpr std::size_t width = memory::kNoStimulus + 1;
  std::vector<double> out((episode.length() + 1) * width, 0.0);
  out[static_cast<std::size_t>(episode.initial_target)] = 1.0;
  for (std::size_t t = 0; t < episode.length(); ++t) {
    out[(t + 1) * width + static_cast<std::size_t>(episode.stimuli[t])] = 1.0;
  }
  return out;
}

EmbeddingBatch gru_transfer_embeddings(const GruOutput& output, std::size_t episode_steps) {
  const std::size_t rows = output.embeddings.rows();
  if (rows != episode_steps + 1) {
    throw ShapeError("gru_transfer_embeddings: " + std::to_string(rows) +
                     " output rows for an episode of " + std::to_string(episode_steps) +
                     " steps (+1 context)");
  }
  std::vector<std::int64_t> ids(episode_steps);
  for (std::size_t i = 0; i < episode_steps; ++i) ids[i] = static_cast<std::int64_t>(i);
  return EmbeddingBatch::model(ad::slice(output.embeddings, 0, 1, rows), std::move(ids));
}

ad::Tensor gru_step_predictions(const GruOutput& output, std::size_t episode_steps) {
  const std::size_t rows = output.predictions.rows();
  if (rows != episode_steps + 1) {
    throw ShapeError("gru_step_predictions: " + std::to_string(rows) +
                     " output rows for an episode of " + std::to_string(episode_steps) +
                     " steps (+1 context)");
  }
  return ad::slice(output.predictions, 0, 1, rows);
}

// ---------------------------------------------------------------------------
// VAE

void VaeStudentConfig::validate() const {
  if (input_dim == 0 || embedding_dim == 0) {
    throw ConfigError("vae: input_dim and embedding_dim must be positive");
  }
  for (auto w : encoder_widths)
    if (w == 0) throw ConfigError("vae: encoder widths must be positive");
  for (auto w : decoder_widths)
    if (w == 0) throw ConfigError("vae: decoder widths must be positive");
  if (beta < 0.0) throw ConfigError("vae: beta must be >= 0");
}

VaeStudent::Layer VaeStudent::make_layer(std::size_t in, std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  return {uniform_param({in, out}, bound, rng), uniform_param({1, out}, bound, rng)};
}

VaeStudent::VaeStudent(const VaeStudentConfig& config, Rng& init_rng) : config_(config) {
  config_.validate();
  std::size_t width = config_.input_dim;
  for (auto w : config_.encoder_widths) {
    encoder_.push_back(make_layer(width, w, init_rng));
    width = w;
  }
  mu_head_ = make_layer(width, config_.embedding_dim, init_rng);
  logvar_head_ = make_layer(width, config_.embedding_dim, init_rng);
  width = config_.embedding_dim;
  for (auto w : config_.decoder_widths) {
    decoder_.push_back(make_layer(width, w, init_rng));
    width = w;
  }
  output_ = make_layer(width, config_.input_dim, init_rng);
}

std::vector<NamedParam> VaeStudent::parameters() const {
  std::vector<NamedParam> out;
  auto push = [&out](const std::string& name, const Layer& l) {
    out.push_back({name + ".weight", l.weight});
    out.push_back({name + ".bias", l.bias});
  };
  for (std::size_t i = 0; i < encoder_.size(); ++i) push("encoder." + std::to_string(i), encoder_[i]);
  push("mu", mu_head_);
  push("logvar", logvar_head_);
  for (std::size_t i = 0; i < decoder_.size(); ++i) push("decoder." + std::to_string(i), decoder_[i]);
  push("output", output_);
  return out;
}

std::vector<ad::Tensor> VaeStudent::parameter_tensors() const {
  std::vector<ad::Tensor> out;
  for (auto& p : parameters()) out.push_back(p.tensor);
  return out;
}

ad::Tensor VaeStudent::encode_hidden(const ad::Tensor& images) const {
  if (images.shape().size() != 2 || images.cols() != config_.input_dim) {
    throw ShapeError("vae: expected batch x " + std::to_string(config_.input_dim) +
                     " images, got " + ad::shape_str(images.shape()));
  }
  ad::Tensor h = images;
  for (const auto& layer : encoder_) {
    h = ad::leaky_relu(ad::add_rowwise(ad::matmul(h, layer.weight), layer.bias),
                       config_.leaky_slope);
  }
  return h;
}

ad::Tensor VaeStudent::encode_mu(const ad::Tensor& images) const {
  return ad::add_rowwise(ad::matmul(encode_hidden(images), mu_head_.weight), mu_head_.bias);
}

VaeOutput VaeStudent::forward(const ad::Tensor& images, Mode mode, Rng* eps_rng) const {
  const ad::Tensor h = encode_hidden(images);
  VaeOutput out;
  out.mu = ad::add_rowwise(ad::matmul(h, mu_head_.weight), mu_head_.bias);
  out.logvar = ad::add_rowwise(ad::matmul(h, logvar_head_.weight), logvar_head_.bias);
  if (mode == Mode::train) {
    if (eps_rng == nullptr) throw ConfigError("vae forward: train mode needs an rng");
    std::vector<double> eps(out.mu.size());
    for (auto& e : eps) e = eps_rng->normal();
    const ad::Tensor noise = ad::Tensor::constant(out.mu.shape(), std::move(eps));
    out.z = ad::add(out.mu, ad::mul(ad::exp(ad::scale(out.logvar, 0.5)), noise));
  } else {
    out.z = out.mu;
  }
  ad::Tensor d = out.z;
  for (const auto& layer : decoder_) {
    d = ad::leaky_relu(ad::add_rowwise(ad::matmul(d, layer.weight), layer.bias),
                       config_.leaky_slope);
  }
  out.reconstruction =
      ad::sigmoid(ad::add_rowwise(ad::matmul(d, output_.weight), output_.bias));
  return out;
}

ad::Tensor image_batch(std::span<const double> pixels, std::size_t rows, std::size_t dim) {
  if (pixels.size() != rows * dim) {
    throw ShapeError("image_batch: " + std::to_string(pixels.size()) + " values for " +
                     std::to_string(rows) + " x " + std::to_string(dim));
  }
  for (double p : pixels) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("image_batch: pixel outside [0, 1]");
  }
  return ad::Tensor::constant({rows, dim}, {pixels.begin(), pixels.end()});
}

}  // namespace b2m
