#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "oni/matrix_kernels.hpp"
#include "oni/nn/dataset.hpp"
#include "oni/nn/layer.hpp"

namespace oni::nn {

/// depth counts linear layers: input -> width x (depth - 1) -> output, with
/// ReLU between layers. depth 1 is multinomial logistic regression.
struct MlpConfig {
  int depth = 3;
  int width = 256;
  int input_dim = 784;
  int output_dim = 10;
  double scale = 1.0;
  int iterations = 5;
  bool centering = false;
  bool compact_bound = true;
  bool gains = false;
  double lr = 0.1;
  double momentum = 0.0;
  double weight_decay = 0.0;
  int batch_size = 256;
  int epochs = 1;
  std::uint64_t seed = 0;
  Method method = Method::oni;

  /// Throws BadConfig naming the first invalid field.
  void validate() const;
  OniConfig oni_config() const;
};

struct MagnitudeProbe {
  std::vector<double> activation;  // mean |h_l| of each layer's output
  std::vector<double> gradient;    // mean |dL/dh_l|
};

class Mlp {
 public:
  /// Proxies start as N(0, 1/in_dim) entries; orth_init uses the
  /// sign-corrected QR of a Gaussian matrix instead.
  explicit Mlp(const MlpConfig& cfg);

  /// Logits for a batch; keeps the activations for backward.
  Matrix forward(const Matrix& x);

  /// Mean softmax cross-entropy of the latest forward. Fills the parameter
  /// gradients and returns the loss.
  double backward(const std::vector<int>& labels);

  /// Momentum SGD on the gradients of the latest backward. Weight decay acts
  /// on the proxies only, never on biases or gains.
  void sgd_step();

  const MlpConfig& config() const { return cfg_; }
  std::vector<OniLinearLayer>& layers() { return layers_; }
  const std::vector<OniLinearLayer>& layers() const { return layers_; }
  const std::vector<LayerGrads>& grads() const { return grads_; }
  /// Pre-activation outputs and their gradients from the latest passes.
  const std::vector<Matrix>& outputs() const { return outputs_; }
  const std::vector<Matrix>& output_grads() const { return output_grads_; }

 private:
  MlpConfig cfg_;
  std::vector<OniLinearLayer> layers_;
  std::vector<Matrix> inputs_;   // input to each layer
  std::vector<Matrix> outputs_;  // pre-activation output of each layer
  std::vector<Matrix> output_grads_;
  std::vector<LayerGrads> grads_;
  std::vector<Matrix> vel_z_;
  std::vector<Vector> vel_bias_;
  std::vector<Vector> vel_gains_;
};

/// Mean cross-entropy of logits against labels.
double cross_entropy(const Matrix& logits, const std::vector<int>& labels);

/// Fraction of rows whose arg-max differs from the label.
double error_rate(const Matrix& logits, const std::vector<int>& labels);

/// Error rate of the network over a whole dataset, in chunks.
double evaluate_error(Mlp& net, const Dataset& data);

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;  // mean mini-batch loss during the epoch
  double train_error = 0.0;
  double test_error = 0.0;
};

using StepCallback = std::function<void(const Mlp& net, long step)>;

/// Seeded shuffle each epoch, last partial batch kept. on_step runs after
/// every parameter update.
std::vector<EpochMetrics> train_mlp(const MlpConfig& cfg, const Dataset& train,
                                    const Dataset& test, const StepCallback& on_step = {});

/// Same loop on an existing network.
std::vector<EpochMetrics> train_mlp(Mlp& net, const Dataset& train, const Dataset& test,
                                    const StepCallback& on_step = {});

MagnitudeProbe probe_magnitudes(Mlp& net, const Matrix& x, const std::vector<int>& labels);

/// Orthonormal rows (rows <= cols) or columns, with the QR sign ambiguity
/// fixed so R has a positive diagonal.
Matrix orthogonal_init(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

}  // namespace oni::nn
