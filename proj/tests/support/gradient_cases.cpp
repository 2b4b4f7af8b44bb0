#include <memory>

#include "b2m/losses.hpp"
#include "b2m/rng.hpp"
#include "b2m/students.hpp"
#include "oracles.hpp"

namespace b2m::testing {

namespace {

using ad::Tensor;

std::vector<double> draw(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

Tensor leaf(Rng& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  return Tensor::parameter(shape, draw(rng, ad::numel(shape), lo, hi));
}

// Entries bounded away from zero (for leaky_relu's kink).
Tensor leaf_off_zero(Rng& rng, ad::Shape shape) {
  auto v = draw(rng, ad::numel(shape), 0.1, 1.0);
  for (auto& x : v) {
    if (rng.bernoulli(0.5)) x = -x;
  }
  return Tensor::parameter(shape, v);
}

// sum(out * w) for a fixed random w, so every output element gets a distinct upstream grad.
std::function<Tensor(const Tensor&)> reducer(Rng& rng) {
  auto weights = std::make_shared<std::vector<double>>();
  auto seed = rng.next();
  return [weights, seed](const Tensor& out) {
    if (weights->size() != out.size()) {
      Rng r(seed);
      *weights = draw(r, out.size(), 0.5, 1.5);
    }
    return ad::sum(ad::mul_constant(out, *weights));
  };
}

}  // namespace

std::vector<GradCase> gradient_cases(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCase> cases;
  auto unary = [&](std::string name, Tensor x, std::function<Tensor(const Tensor&)> op) {
    auto red = reducer(rng);
    cases.push_back({std::move(name), [=] { return red(op(x)); }, {x}});
  };
  auto binary = [&](std::string name, Tensor a, Tensor b,
                    std::function<Tensor(const Tensor&, const Tensor&)> op) {
    auto red = reducer(rng);
    cases.push_back({std::move(name), [=] { return red(op(a, b)); }, {a, b}});
  };

  binary("add", leaf(rng, {3, 4}), leaf(rng, {3, 4}), ad::add);
  binary("sub", leaf(rng, {3, 4}), leaf(rng, {3, 4}), ad::sub);
  binary("mul", leaf(rng, {3, 4}), leaf(rng, {3, 4}), ad::mul);
  unary("scale", leaf(rng, {2, 5}), [](const Tensor& x) { return ad::scale(x, -2.5); });
  unary("add_scalar", leaf(rng, {2, 5}), [](const Tensor& x) { return ad::add_scalar(x, 0.7); });
  binary("add_rowwise", leaf(rng, {4, 3}), leaf(rng, {1, 3}), ad::add_rowwise);
  {
    auto mask = draw(rng, 12);
    unary("mul_constant", leaf(rng, {3, 4}),
          [mask](const Tensor& x) { return ad::mul_constant(x, mask); });
  }
  binary("matmul", leaf(rng, {3, 4}), leaf(rng, {4, 2}), ad::matmul);
  unary("transpose", leaf(rng, {3, 4}), ad::transpose);
  binary("concat_rows", leaf(rng, {2, 3}), leaf(rng, {1, 3}),
         [](const Tensor& a, const Tensor& b) { return ad::concat({a, b}, 0); });
  binary("concat_cols", leaf(rng, {2, 3}), leaf(rng, {2, 2}),
         [](const Tensor& a, const Tensor& b) { return ad::concat({a, b}, 1); });
  unary("slice_rows", leaf(rng, {5, 3}), [](const Tensor& x) { return ad::slice(x, 0, 1, 4); });
  unary("slice_cols", leaf(rng, {3, 5}), [](const Tensor& x) { return ad::slice(x, 1, 2, 5); });
  unary("reshape", leaf(rng, {3, 4}), [](const Tensor& x) { return ad::reshape(x, {2, 6}); });
  unary("sigmoid", leaf(rng, {3, 4}, -3, 3), ad::sigmoid);
  unary("tanh", leaf(rng, {3, 4}, -2, 2), ad::tanh);
  unary("exp", leaf(rng, {3, 4}), ad::exp);
  unary("log", leaf(rng, {3, 4}, 0.2, 3.0), ad::log);
  unary("leaky_relu", leaf_off_zero(rng, {3, 4}),
        [](const Tensor& x) { return ad::leaky_relu(x, 0.01); });
  unary("sum", leaf(rng, {3, 4}), ad::sum);
  unary("mean", leaf(rng, {3, 4}), ad::mean);
  unary("logsumexp_rows", leaf(rng, {4, 5}, -3, 3), ad::logsumexp_rows);
  unary("diagonal", leaf(rng, {4, 4}), ad::diagonal);
  {
    // A node used twice: gradients must accumulate.
    Tensor x = leaf(rng, {2, 3});
    cases.push_back({"shared_node", [x] { return ad::sum(ad::mul(ad::tanh(x), ad::exp(x))); }, {x}});
  }

  // Losses, model side only (teacher rows are constants).
  {
    Tensor model = leaf(rng, {5, 3});
    auto teacher = draw(rng, 15);
    cases.push_back({"contrastive_transfer_loss",
                     [=] {
                       return contrastive_transfer_loss(EmbeddingBatch::teacher(5, 3, teacher),
                                                        EmbeddingBatch::model(model), 0.5);
                     },
                     {model}});
  }
  {
    Tensor model = leaf(rng, {4, 6});
    auto teacher = draw(rng, 24);
    cases.push_back({"latent_transfer_loss",
                     [=] {
                       return latent_transfer_loss(EmbeddingBatch::model(model),
                                                   EmbeddingBatch::teacher(4, 6, teacher));
                     },
                     {model}});
  }
  {
    Tensor pred = leaf(rng, {6, 1}, -1.4, 1.4);
    std::vector<int> targets{1, -1, -1, 1, 1, -1};
    cases.push_back({"task_loss_sequence", [=] { return task_loss_sequence(pred, targets); }, {pred}});
  }
  {
    Tensor task = leaf(rng, {1}), transfer = leaf(rng, {1});
    cases.push_back({"combined_loss",
                     [=] { return combined_loss(ad::exp(task), ad::mul(transfer, transfer), 0.3); },
                     {task, transfer}});
  }
  {
    Tensor recon = leaf(rng, {2, 5}, 0.05, 0.95), mu = leaf(rng, {2, 3}), logvar = leaf(rng, {2, 3});
    auto target = Tensor::constant({2, 5}, draw(rng, 10, 0.0, 1.0));
    cases.push_back({"vae_loss",
                     [=] { return vae_loss(recon, target, mu, logvar, 0.7).total; },
                     {recon, mu, logvar}});
  }

  // Full students on tiny configs.
  {
    GruStudentConfig cfg;
    cfg.hidden_size = 3;
    cfg.embedding_dim = 2;
    auto model = std::make_shared<GruStudent>(cfg, rng);
    std::vector<double> one_hot{1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0};
    std::vector<int> targets{-1, 1, -1, 1};
    auto teacher = draw(rng, 8);
    const std::uint64_t mask_seed = rng.next();
    auto loss = [=](Mode mode) {
      Rng dropout(mask_seed);
      const auto out = model->forward(one_hot, 5, mode, &dropout);
      const Tensor task = task_loss_sequence(gru_step_predictions(out, 4), targets);
      const Tensor transfer = contrastive_transfer_loss(
          EmbeddingBatch::teacher(4, 2, teacher), gru_transfer_embeddings(out, 4), 0.1);
      return combined_loss(task, transfer, 0.2);
    };
    cases.push_back({"gru_student_eval", [=] { return loss(Mode::eval); }, model->parameter_tensors()});
    cases.push_back({"gru_student_train", [=] { return loss(Mode::train); }, model->parameter_tensors()});
  }
  {
    VaeStudentConfig cfg;
    cfg.input_dim = 6;
    cfg.encoder_widths = {5};
    cfg.decoder_widths = {4};
    cfg.embedding_dim = 3;
    cfg.beta = 0.5;
    auto model = std::make_shared<VaeStudent>(cfg, rng);
    auto images = Tensor::constant({2, 6}, draw(rng, 12, 0.0, 1.0));
    auto human = Tensor::constant({3, 6}, draw(rng, 18, 0.0, 1.0));
    auto teacher = draw(rng, 9);
    const std::uint64_t eps_seed = rng.next();
    cases.push_back({"vae_student_train",
                     [=] {
                       Rng eps(eps_seed);
                       const auto out = model->forward(images, Mode::train, &eps);
                       const auto task = vae_loss(out.reconstruction, images, out.mu, out.logvar, cfg.beta);
                       const auto transfer =
                           latent_transfer_loss(EmbeddingBatch::model(model->encode_mu(human)),
                                                EmbeddingBatch::teacher(3, 3, teacher));
                       return combined_loss(task.total, transfer, 0.4);
                     },
                     model->parameter_tensors()});
  }
  return cases;
}

}  // namespace b2m::testing
