#include "lrce/disentangle.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lrce/adam.hpp"

namespace lrce {

namespace {

constexpr double kLogFloor = 1e-12;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Tensor label_column(std::span<const double> labels, std::span<const std::size_t> rows) {
  Tensor out(rows.size(), 1);
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = labels[rows[i]];
  return out;
}

NodeId encode_node(const DisentangledModel& m, const ModelBindings& b, NodeId x, Graph& g) {
  return mlp_forward(m.encoder, b.encoder, x, g);
}

NodeId decode_node(const DisentangledModel& m, const ModelBindings& b, NodeId z, NodeId labels, Graph& g) {
  return mlp_forward(m.decoder, b.decoder, g.concat_cols(z, labels), g);
}

NodeId neg_mean_log(Graph& g, NodeId p) {
  return g.scalar_mul(-1.0, g.reduce_mean(g.clamped_log(p, kLogFloor)));
}

void require_finite(double v, const char* what, std::size_t epoch,
                    const std::shared_ptr<const DisentangledModel>& last_good) {
  if (!std::isfinite(v)) {
    throw DisentangleDiverged(std::string(what) + " became non-finite in epoch " + std::to_string(epoch) +
                                  "; returning the last completed epoch's model",
                              last_good);
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lambda_adv >= 0.0) || !(lambda_d >= 0.0)) throw std::invalid_argument("lambda weights must be >= 0");
  if (!(kernel_sigma > 0.0)) throw std::invalid_argument("kernel_sigma must be > 0");
  if (!(vicinity_k > 0.0)) throw std::invalid_argument("vicinity_k must be > 0");
  if (latent_dim == 0) throw std::invalid_argument("latent_dim must be >= 1");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !(lr_adversary >= 0.0) || !(lr_discriminator >= 0.0)) {
    throw std::invalid_argument("learning rates must be >= 0");
  }
  if (vicinity_retry_limit == 0) throw std::invalid_argument("vicinity_retry_limit must be >= 1");
  if (hidden.empty() || discriminator_hidden.empty()) throw std::invalid_argument("networks need a hidden layer");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"lambda_adv", lambda_adv},
          {"lambda_d", lambda_d},
          {"kernel_sigma", kernel_sigma},
          {"vicinity_k", vicinity_k},
          {"latent_dim", latent_dim},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"inner_iterations", inner_iterations},
          {"seed", seed},
          {"learning_rate", learning_rate},
          {"lr_adversary", lr_adversary},
          {"lr_discriminator", lr_discriminator},
          {"vicinity_retry_limit", vicinity_retry_limit},
          {"hidden", hidden},
          {"discriminator_hidden", discriminator_hidden},
          {"non_saturating", non_saturating},
          {"perturbed_fake_labels", perturbed_fake_labels}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  const auto known = c.to_json();
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown training config key '" + key + "'");
  }
  c.lambda_adv = j.value("lambda_adv", c.lambda_adv);
  c.lambda_d = j.value("lambda_d", c.lambda_d);
  c.kernel_sigma = j.value("kernel_sigma", c.kernel_sigma);
  c.vicinity_k = j.value("vicinity_k", c.vicinity_k);
  c.latent_dim = j.value("latent_dim", c.latent_dim);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.inner_iterations = j.value("inner_iterations", c.inner_iterations);
  c.seed = j.value("seed", c.seed);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.lr_adversary = j.value("lr_adversary", c.lr_adversary);
  c.lr_discriminator = j.value("lr_discriminator", c.lr_discriminator);
  c.vicinity_retry_limit = j.value("vicinity_retry_limit", c.vicinity_retry_limit);
  c.hidden = j.value("hidden", c.hidden);
  c.discriminator_hidden = j.value("discriminator_hidden", c.discriminator_hidden);
  c.non_saturating = j.value("non_saturating", c.non_saturating);
  c.perturbed_fake_labels = j.value("perturbed_fake_labels", c.perturbed_fake_labels);
  c.validate();
  return c;
}

Tensor DisentangledModel::encode(const Tensor& x) const { return encoder.apply(x); }

Tensor DisentangledModel::decode(const Tensor& z, std::span<const double> labels) const {
  if (z.rank() != 2 || z.cols() != latent_width()) {
    throw ShapeError("decode: code shape " + shape_str(z.shape()) + " does not match latent width " +
                     std::to_string(latent_width()));
  }
  if (labels.size() != z.rows()) throw ShapeError("decode: need one label per code row");
  Tensor in(z.rows(), z.cols() + 1);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    std::copy(z.row(r).begin(), z.row(r).end(), in.row(r).begin());
    in.at(r, z.cols()) = labels[r];
  }
  return decoder.apply(in);
}

DisentangledModel init_model(std::size_t feature_width, const TrainConfig& config, std::string fingerprint) {
  config.validate();
  DisentangledModel m;
  m.config = config;
  m.fingerprint = std::move(fingerprint);
  m.encoder = init_mlp(make_spec(feature_width, config.hidden, config.latent_dim), derive_seed(config.seed, 1));
  m.decoder = init_mlp(make_spec(config.latent_dim + 1, config.hidden, feature_width), derive_seed(config.seed, 2));
  m.adversary = init_mlp(make_spec(config.latent_dim, config.hidden, 1), derive_seed(config.seed, 3));
  m.discriminator = init_mlp(make_spec(feature_width + 1, config.discriminator_hidden, 1, Activation::kSigmoid),
                             derive_seed(config.seed, 4));
  return m;
}

VicinityIndex::VicinityIndex(std::span<const double> labels) {
  std::vector<std::size_t> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return labels[a] < labels[b]; });
  sorted_.reserve(order.size());
  for (auto i : order) sorted_.push_back(labels[i]);
  rows_ = std::move(order);
}

std::pair<std::size_t, std::size_t> VicinityIndex::range(double y, double k) const {
  // Partition predicates use the same |y - y_i| <= k test as a linear scan,
  // so boundary rounding can never disagree with it.
  auto inside = [&](double v) { return std::abs(y - v) <= k; };
  const auto lo = std::partition_point(sorted_.begin(), sorted_.end(),
                                       [&](double v) { return v < y && !inside(v); });
  const auto hi = std::partition_point(lo, sorted_.end(), [&](double v) { return v <= y || inside(v); });
  return {static_cast<std::size_t>(lo - sorted_.begin()), static_cast<std::size_t>(hi - sorted_.begin())};
}

std::size_t VicinityIndex::count(double y, double k) const {
  const auto [lo, hi] = range(y, k);
  return hi - lo;
}

std::span<const std::size_t> VicinityIndex::neighbors(double y, double k) const {
  const auto [lo, hi] = range(y, k);
  return std::span<const std::size_t>(rows_).subspan(lo, hi - lo);
}

ModelBindings bind_model(const DisentangledModel& model, Graph& graph, Branch branch) {
  const bool ae = branch == Branch::kAutoencoder;
  ModelBindings b;
  b.encoder = bind_mlp(model.encoder, graph, ae);
  b.decoder = bind_mlp(model.decoder, graph, ae);
  b.adversary = bind_mlp(model.adversary, graph, branch == Branch::kAdversary);
  b.discriminator = bind_mlp(model.discriminator, graph, branch == Branch::kDiscriminator);
  return b;
}

VicinalDraw draw_vicinal(const VicinityIndex& index, std::span<const double> labels, std::size_t terms,
                         const TrainConfig& config, std::mt19937_64& rng) {
  if (labels.empty() || index.size() != labels.size()) {
    throw std::invalid_argument("draw_vicinal: empty or mismatched label set");
  }
  std::uniform_int_distribution<std::size_t> pick(0, labels.size() - 1);
  std::normal_distribution<double> perturb(0.0, config.kernel_sigma);

  auto one = [&](std::vector<std::size_t>& rows, std::vector<double>& targets) {
    const double anchor = labels[pick(rng)];
    for (std::size_t attempt = 0; attempt < config.vicinity_retry_limit; ++attempt) {
      const double u = anchor + perturb(rng);
      const auto hood = index.neighbors(u, config.vicinity_k);
      if (hood.empty()) continue;
      std::uniform_int_distribution<std::size_t> within(0, hood.size() - 1);
      rows.push_back(hood[within(rng)]);
      targets.push_back(u);
      return;
    }
    throw VicinityExhausted("no labels within vicinity_k=" + std::to_string(config.vicinity_k) +
                            " of the perturbed target after " + std::to_string(config.vicinity_retry_limit) +
                            " retries; increase vicinity_k or reduce kernel_sigma");
  };

  VicinalDraw draw;
  for (std::size_t i = 0; i < terms; ++i) one(draw.real_rows, draw.real_targets);
  for (std::size_t i = 0; i < terms; ++i) one(draw.fake_rows, draw.fake_targets);
  return draw;
}

NodeId reconstruction_loss(const DisentangledModel& model, const ModelBindings& b, NodeId x, NodeId labels,
                           Graph& graph) {
  const NodeId z = encode_node(model, b, x, graph);
  return graph.mean_sq_err(x, decode_node(model, b, z, labels, graph));
}

NodeId adversary_loss(const DisentangledModel& model, const ModelBindings& b, NodeId x, NodeId labels,
                      Graph& graph) {
  const NodeId z = encode_node(model, b, x, graph);
  return graph.mean_sq_err(labels, mlp_forward(model.adversary, b.adversary, z, graph));
}

DiscriminatorTerms discriminator_loss(const DisentangledModel& model, const ModelBindings& b, const Dataset& dt,
                                      const VicinalDraw& draw, Graph& graph) {
  if (draw.real_rows.empty() || draw.fake_rows.empty()) throw std::invalid_argument("empty vicinal draw");
  const auto& labels = dt.labels();

  const NodeId x_real = graph.constant(dt.x.select_rows(draw.real_rows));
  const NodeId u_real = graph.constant(Tensor::column(draw.real_targets));
  const NodeId p_real =
      mlp_forward(model.discriminator, b.discriminator, graph.concat_cols(x_real, u_real), graph);

  const NodeId x_src = graph.constant(dt.x.select_rows(draw.fake_rows));
  const NodeId u_fake = graph.constant(Tensor::column(draw.fake_targets));
  const NodeId decode_labels = model.config.perturbed_fake_labels
                                   ? u_fake
                                   : graph.constant(label_column(labels, draw.fake_rows));
  const NodeId x_fake = decode_node(model, b, encode_node(model, b, x_src, graph), decode_labels, graph);
  const NodeId p_fake =
      mlp_forward(model.discriminator, b.discriminator, graph.concat_cols(x_fake, u_fake), graph);

  DiscriminatorTerms t;
  t.real = neg_mean_log(graph, p_real);
  t.fake = neg_mean_log(graph, graph.add_scalar(1.0, graph.scalar_mul(-1.0, p_fake)));
  t.fake_saturated = neg_mean_log(graph, p_fake);
  t.loss = graph.add(t.real, t.fake);
  return t;
}

NodeId hvdl_batch(const DisentangledModel& model, const ModelBindings& b, const Dataset& dt,
                  const VicinityIndex& index, const TrainConfig& config, std::uint64_t seed, Graph& graph) {
  std::mt19937_64 rng(seed);
  const auto draw = draw_vicinal(index, dt.labels(), config.batch_size, config, rng);
  return discriminator_loss(model, b, dt, draw, graph).loss;
}

TotalLossNodes total_loss(const DisentangledModel& model, const ModelBindings& b, const Dataset& dt,
                          std::span<const std::size_t> batch, const VicinalDraw& draw, const TrainConfig& config,
                          Graph& graph) {
  if (batch.empty()) throw std::invalid_argument("total_loss: empty batch");
  const NodeId x = graph.constant(dt.x.select_rows(batch));
  const NodeId y = graph.constant(label_column(dt.labels(), batch));
  const NodeId z = encode_node(model, b, x, graph);

  TotalLossNodes out;
  out.reconstruction = graph.mean_sq_err(x, decode_node(model, b, z, y, graph));
  out.adversarial = graph.mean_sq_err(y, mlp_forward(model.adversary, b.adversary, z, graph));
  const auto d = discriminator_loss(model, b, dt, draw, graph);
  out.discriminator = d.loss;

  const NodeId minus_adv = graph.sub(out.reconstruction, graph.scalar_mul(config.lambda_adv, out.adversarial));
  out.total = config.non_saturating
                  ? graph.add(minus_adv, graph.scalar_mul(config.lambda_d, d.fake_saturated))
                  : graph.sub(minus_adv, graph.scalar_mul(config.lambda_d, d.loss));
  return out;
}

DisentangledModel train_disentangled(const Dataset& dt, const TrainConfig& config) {
  config.validate();
  if (!dt.y_hat) throw std::invalid_argument("train: dataset must be relabeled with the regressor (D_t)");
  if (dt.size() == 0) throw std::invalid_argument("train: empty dataset");

  DisentangledModel model = init_model(dt.width(), config, dt.schema_fingerprint);
  const auto& labels = *dt.y_hat;
  const VicinityIndex index(labels);

  AdamState adam_enc(model.encoder, AdamConfig{config.learning_rate});
  AdamState adam_dec(model.decoder, AdamConfig{config.learning_rate});
  AdamState adam_adv(model.adversary, AdamConfig{config.adversary_rate()});
  AdamState adam_disc(model.discriminator, AdamConfig{config.discriminator_rate()});

  std::mt19937_64 rng(derive_seed(config.seed, 5));
  BatchSampler sampler(dt.size(), derive_seed(config.seed, 6));
  const std::size_t iterations = config.iterations_for(dt.size());
  auto last_good = std::make_shared<const DisentangledModel>(model);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    LossRecord sum;
    for (std::size_t it = 0; it < iterations; ++it) {
      const auto batch = sampler.next(config.batch_size);
      {
        Graph g;
        const auto b = bind_model(model, g, Branch::kAdversary);
        const NodeId x = g.constant(dt.x.select_rows(batch));
        const NodeId y = g.constant(label_column(labels, batch));
        const NodeId loss = adversary_loss(model, b, x, y, g);
        require_finite(g.value(loss).item(), "adversary loss", epoch, last_good);
        adam_step(adam_adv, model.adversary, b.adversary, backward(g, loss));
      }
      {
        Graph g;
        const auto b = bind_model(model, g, Branch::kDiscriminator);
        const auto draw = draw_vicinal(index, labels, config.batch_size, config, rng);
        const NodeId loss = discriminator_loss(model, b, dt, draw, g).loss;
        require_finite(g.value(loss).item(), "discriminator loss", epoch, last_good);
        adam_step(adam_disc, model.discriminator, b.discriminator, backward(g, loss));
      }
      {
        const auto ae_batch = sampler.next(config.batch_size);
        const auto draw = draw_vicinal(index, labels, config.batch_size, config, rng);
        Graph g;
        const auto b = bind_model(model, g, Branch::kAutoencoder);
        const auto t = total_loss(model, b, dt, ae_batch, draw, config, g);
        require_finite(g.value(t.total).item(), "autoencoder loss", epoch, last_good);
        const auto grads = backward(g, t.total);
        adam_step(adam_enc, model.encoder, b.encoder, grads);
        adam_step(adam_dec, model.decoder, b.decoder, grads);
        sum.reconstruction += g.value(t.reconstruction).item();
        sum.adversarial += g.value(t.adversarial).item();
        sum.discriminator += g.value(t.discriminator).item();
        sum.total += g.value(t.total).item();
      }
    }
    const double n = static_cast<double>(iterations);
    model.history.push_back({sum.reconstruction / n, sum.adversarial / n, sum.discriminator / n, sum.total / n});
    last_good = std::make_shared<const DisentangledModel>(model);
  }
  return model;
}

}  // namespace lrce
