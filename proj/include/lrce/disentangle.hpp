#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lrce/dataset.hpp"
#include "lrce/graph.hpp"
#include "lrce/mlp.hpp"
#include "lrce/training.hpp"

namespace lrce {

/// Hyperparameters of the adversarial training loop. Defaults are the
/// tabular settings.
struct TrainConfig {
  double lambda_adv = 0.5;
  double lambda_d = 0.5;
  double kernel_sigma = 0.035;  // label perturbation bandwidth
  double vicinity_k = 0.004;    // hard vicinity radius
  std::size_t latent_dim = 2;
  std::size_t epochs = 300;
  std::size_t batch_size = 100;
  std::size_t inner_iterations = 0;  // 0: ceil(rows / batch_size)
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;  // encoder + decoder
  double lr_adversary = 0.0;    // 0: same as learning_rate
  double lr_discriminator = 0.0;
  std::size_t vicinity_retry_limit = 20;
  std::vector<std::size_t> hidden = {64, 64, 64};
  std::vector<std::size_t> discriminator_hidden = {64, 64, 64};
  bool non_saturating = false;
  bool perturbed_fake_labels = false;

  void validate() const;
  double adversary_rate() const { return lr_adversary > 0.0 ? lr_adversary : learning_rate; }
  double discriminator_rate() const { return lr_discriminator > 0.0 ? lr_discriminator : learning_rate; }
  std::size_t iterations_for(std::size_t rows) const {
    return inner_iterations ? inner_iterations : batches_per_epoch(rows, batch_size);
  }

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j);
};

struct LossRecord {
  double reconstruction = 0.0;
  double adversarial = 0.0;
  double discriminator = 0.0;
  double total = 0.0;
};

/// Label-conditioned autoencoder seen by the generating step.
class ConditionalAutoencoder {
 public:
  virtual ~ConditionalAutoencoder() = default;
  virtual Tensor encode(const Tensor& x) const = 0;
  /// Decodes codes `z` (rows x latent) at one label per row.
  virtual Tensor decode(const Tensor& z, std::span<const double> labels) const = 0;
  virtual std::size_t feature_width() const = 0;
  virtual std::size_t latent_width() const = 0;
  virtual const std::string& schema_fingerprint() const = 0;
};

/// Encoder_u, label-conditioned decoder, adversarial regressor and vicinal
/// discriminator, plus the config and loss history they were trained with.
struct DisentangledModel final : ConditionalAutoencoder {
  Mlp encoder;        // x -> z_u
  Mlp decoder;        // [z_u | y] -> x'
  Mlp adversary;      // z_u -> y'
  Mlp discriminator;  // [x | y] -> P(real)
  TrainConfig config;
  std::string fingerprint;
  std::vector<LossRecord> history;

  Tensor encode(const Tensor& x) const override;
  Tensor decode(const Tensor& z, std::span<const double> labels) const override;
  std::size_t feature_width() const override { return encoder.spec.input_width(); }
  std::size_t latent_width() const override { return encoder.spec.output_width(); }
  const std::string& schema_fingerprint() const override { return fingerprint; }
};

DisentangledModel init_model(std::size_t feature_width, const TrainConfig& config, std::string fingerprint);

/// Sorted labels for exact hard-vicinity queries #{i : |y - y_i| <= k}.
class VicinityIndex {
 public:
  explicit VicinityIndex(std::span<const double> labels);

  std::size_t count(double y, double k) const;
  /// Original row indices inside the vicinity, ordered by label.
  std::span<const std::size_t> neighbors(double y, double k) const;
  std::size_t size() const { return sorted_.size(); }
  std::span<const double> sorted_labels() const { return sorted_; }

 private:
  std::pair<std::size_t, std::size_t> range(double y, double k) const;

  std::vector<double> sorted_;
  std::vector<std::size_t> rows_;
};

class VicinityExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DisentangleDiverged : public TrainingDiverged {
 public:
  DisentangleDiverged(const std::string& what, std::shared_ptr<const DisentangledModel> last_good)
      : TrainingDiverged(what), last_good_(std::move(last_good)) {}
  const DisentangledModel& last_good() const { return *last_good_; }

 private:
  std::shared_ptr<const DisentangledModel> last_good_;
};

enum class Branch { kNone, kAdversary, kDiscriminator, kAutoencoder };

/// Graph leaves for all four networks. Only the networks updated by `branch`
/// are trainable; the others are constants.
struct ModelBindings {
  BoundMlp encoder, decoder, adversary, discriminator;
};

ModelBindings bind_model(const DisentangledModel& model, Graph& graph, Branch branch);

/// One vicinal sample set: for every term a target label u and the row drawn
/// from its hard vicinity.
struct VicinalDraw {
  std::vector<std::size_t> real_rows;
  std::vector<double> real_targets;
  std::vector<std::size_t> fake_rows;
  std::vector<double> fake_targets;
};

/// Draws `terms` real and `terms` fake vicinal pairs. For each: pick j
/// uniformly, u = label_j + N(0, sigma^2), then a uniform row with
/// |u - label_i| <= k, resampling the perturbation up to the retry limit.
VicinalDraw draw_vicinal(const VicinityIndex& index, std::span<const double> labels, std::size_t terms,
                         const TrainConfig& config, std::mt19937_64& rng);

/// L_Rec: mean over all elements of (x - decode(encode(x), y))^2.
NodeId reconstruction_loss(const DisentangledModel& model, const ModelBindings& b, NodeId x, NodeId labels,
                           Graph& graph);

/// L_Adv: mean of (y - adversary(encode(x)))^2.
NodeId adversary_loss(const DisentangledModel& model, const ModelBindings& b, NodeId x, NodeId labels,
                      Graph& graph);

struct DiscriminatorTerms {
  NodeId loss;           // L_D = real + fake
  NodeId real;           // -mean log D(x_r, u)
  NodeId fake;           // -mean log(1 - D(x_g, u))
  NodeId fake_saturated; // -mean log D(x_g, u), for the non-saturating generator loss
};

/// Hard-vicinal discriminator loss over a given draw. Fake samples are
/// reconstructions of the drawn rows at their own labels (or at u when
/// config.perturbed_fake_labels is set). Logs are floored at 1e-12.
DiscriminatorTerms discriminator_loss(const DisentangledModel& model, const ModelBindings& b, const Dataset& dt,
                                      const VicinalDraw& draw, Graph& graph);

/// Draw + discriminator loss, seeded.
NodeId hvdl_batch(const DisentangledModel& model, const ModelBindings& b, const Dataset& dt,
                  const VicinityIndex& index, const TrainConfig& config, std::uint64_t seed, Graph& graph);

struct TotalLossNodes {
  NodeId reconstruction;
  NodeId adversarial;
  NodeId discriminator;
  NodeId total;
};

/// L = L_Rec - lambda_adv * L_Adv - lambda_d * L_D on the rows `batch` of
/// D_t, with the discriminator term over `draw`.
TotalLossNodes total_loss(const DisentangledModel& model, const ModelBindings& b, const Dataset& dt,
                          std::span<const std::size_t> batch, const VicinalDraw& draw, const TrainConfig& config,
                          Graph& graph);

/// Runs the training loop: per iteration an adversary step, a discriminator
/// step, then an encoder/decoder step, each on fresh samples. `dt` must be
/// relabeled (carry ŷ).
DisentangledModel train_disentangled(const Dataset& dt, const TrainConfig& config);

}  // namespace lrce
