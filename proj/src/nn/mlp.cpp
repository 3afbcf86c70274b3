#include "oni/nn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "oni/errors.hpp"
#include "oni/random.hpp"

namespace oni::nn {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::BadConfig, "MlpConfig: " + what);
}

constexpr std::uint64_t kShuffleStream = 1000;

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  p.colwise() -= logits.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

void check_labels(const Matrix& logits, const std::vector<int>& labels) {
  if (std::size_t(logits.rows()) != labels.size()) {
    throw Error(ErrorCode::CountMismatch, "label count differs from batch size");
  }
  for (int y : labels) {
    if (y < 0 || y >= logits.cols()) throw Error(ErrorCode::BadConfig, "label out of range");
  }
}

}  // namespace

void MlpConfig::validate() const {
  require(depth >= 1, "depth must be >= 1");
  require(width >= 1, "width must be >= 1");
  require(input_dim >= 1, "input_dim must be >= 1");
  require(output_dim >= 1, "output_dim must be >= 1");
  require(scale > 0.0 && std::isfinite(scale), "scale must be positive");
  require(iterations >= 0 && iterations <= OniConfig::kMaxIterations,
          "iterations must lie in [0, 100]");
  require(lr > 0.0, "lr must be positive");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
  require(weight_decay >= 0.0, "weight_decay must be nonnegative");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(epochs >= 0, "epochs must be >= 0");
}

OniConfig MlpConfig::oni_config() const {
  OniConfig cfg;
  cfg.iterations = iterations;
  cfg.centering = centering;
  cfg.compact_bound = compact_bound;
  cfg.scale = scale;
  return cfg;
}

Matrix orthogonal_init(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  const bool wide = rows <= cols;
  // Tall Gaussian factor whose Q has orthonormal columns.
  const Matrix g = wide ? Matrix(rng.normal_matrix(rows, cols).transpose())
                        : rng.normal_matrix(rows, cols);
  const Eigen::Index k = g.cols();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(g.rows(), k);
  const Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return wide ? Matrix(q.transpose()) : q;
}

Mlp::Mlp(const MlpConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const OniConfig oni_cfg = cfg_.oni_config();
  for (int l = 0; l < cfg_.depth; ++l) {
    const int in = l == 0 ? cfg_.input_dim : cfg_.width;
    const int out = l == cfg_.depth - 1 ? cfg_.output_dim : cfg_.width;
    const std::uint64_t seed = derive_seed(cfg_.seed, std::uint64_t(l));
    Matrix z = cfg_.method == Method::orth_init
                   ? orthogonal_init(out, in, seed)
                   : Rng(seed).normal_matrix(out, in, 0.0, 1.0 / std::sqrt(double(in)));
    layers_.emplace_back(cfg_.method, std::move(z), Vector(Vector::Zero(out)), oni_cfg, cfg_.gains);
    vel_z_.push_back(Matrix::Zero(out, in));
    vel_bias_.push_back(Vector::Zero(out));
    vel_gains_.push_back(cfg_.gains ? Vector(Vector::Zero(out)) : Vector());
  }
}

Matrix Mlp::forward(const Matrix& x) {
  inputs_.clear();
  outputs_.clear();
  Matrix h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    inputs_.push_back(h);
    outputs_.push_back(layers_[l].forward(h));
    if (l + 1 < layers_.size()) h = outputs_.back().cwiseMax(0.0);
  }
  return outputs_.back();
}

double Mlp::backward(const std::vector<int>& labels) {
  if (outputs_.empty()) throw Error(ErrorCode::StaleCache, "backward before forward");
  const Matrix& logits = outputs_.back();
  check_labels(logits, labels);
  const double batch = double(logits.rows());

  Matrix d = softmax_rows(logits);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    loss -= std::log(std::max(d(i, labels[std::size_t(i)]), 1e-300));
    d(i, labels[std::size_t(i)]) -= 1.0;
  }
  d /= batch;

  const std::size_t depth = layers_.size();
  grads_.assign(depth, LayerGrads{});
  output_grads_.assign(depth, Matrix());
  for (std::size_t l = depth; l-- > 0;) {
    output_grads_[l] = d;
    grads_[l] = layers_[l].backward(inputs_[l], d);
    if (l > 0) {
      d = grads_[l].dx.cwiseProduct(Matrix((outputs_[l - 1].array() > 0.0).cast<double>()));
    }
  }
  return loss / batch;
}

void Mlp::sgd_step() {
  if (grads_.size() != layers_.size()) throw Error(ErrorCode::StaleCache, "no gradients to apply");
  const double mu = cfg_.momentum;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto& layer = layers_[l];
    const auto& g = grads_[l];
    vel_z_[l] = mu * vel_z_[l] + g.dz + cfg_.weight_decay * layer.z();
    vel_bias_[l] = mu * vel_bias_[l] + g.d_bias;
    layer.mutable_z() -= cfg_.lr * vel_z_[l];
    layer.mutable_bias() -= cfg_.lr * vel_bias_[l];
    if (layer.has_gains()) {
      vel_gains_[l] = mu * vel_gains_[l] + g.d_gains;
      layer.mutable_gains() -= cfg_.lr * vel_gains_[l];
    }
  }
  grads_.clear();
}

double cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  check_labels(logits, labels);
  const Matrix p = softmax_rows(logits);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    loss -= std::log(std::max(p(i, labels[std::size_t(i)]), 1e-300));
  }
  return loss / double(logits.rows());
}

double error_rate(const Matrix& logits, const std::vector<int>& labels) {
  check_labels(logits, labels);
  long wrong = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best;
    logits.row(i).maxCoeff(&best);
    if (best != labels[std::size_t(i)]) ++wrong;
  }
  return logits.rows() == 0 ? 0.0 : double(wrong) / double(logits.rows());
}

double evaluate_error(Mlp& net, const Dataset& data) {
  const Eigen::Index chunk = 1024;
  long wrong = 0;
  for (Eigen::Index start = 0; start < data.size(); start += chunk) {
    const Eigen::Index count = std::min(chunk, data.size() - start);
    const Matrix logits = net.forward(data.features.middleRows(start, count));
    const std::vector<int> labels(data.labels.begin() + start, data.labels.begin() + start + count);
    wrong += std::lround(error_rate(logits, labels) * double(count));
  }
  return data.size() == 0 ? 0.0 : double(wrong) / double(data.size());
}

std::vector<EpochMetrics> train_mlp(Mlp& net, const Dataset& train, const Dataset& test,
                                    const StepCallback& on_step) {
  const MlpConfig& cfg = net.config();
  train.validate();
  test.validate();
  for (const Dataset* d : {&train, &test}) {
    if (d->dim() != cfg.input_dim) {
      throw Error(ErrorCode::ShapeMismatch, "dataset dimension differs from input_dim");
    }
    if (d->classes > cfg.output_dim) {
      throw Error(ErrorCode::ShapeMismatch, "dataset has more classes than output_dim");
    }
  }

  Rng shuffler(derive_seed(cfg.seed, kShuffleStream));
  std::vector<Eigen::Index> order(std::size_t(train.size()));
  std::iota(order.begin(), order.end(), Eigen::Index(0));

  std::vector<EpochMetrics> curve;
  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffler.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    long batches = 0;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
      const std::size_t count = std::min(std::size_t(cfg.batch_size), order.size() - start);
      Matrix x(Eigen::Index(count), train.dim());
      std::vector<int> labels(count);
      for (std::size_t k = 0; k < count; ++k) {
        x.row(Eigen::Index(k)) = train.features.row(order[start + k]);
        labels[k] = train.labels[std::size_t(order[start + k])];
      }
      net.forward(x);
      loss_sum += net.backward(labels);
      net.sgd_step();
      ++batches;
      ++step;
      if (on_step) on_step(net, step);
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = batches ? loss_sum / double(batches) : 0.0;
    m.train_error = evaluate_error(net, train);
    m.test_error = evaluate_error(net, test);
    curve.push_back(m);
  }
  return curve;
}

std::vector<EpochMetrics> train_mlp(const MlpConfig& cfg, const Dataset& train,
                                    const Dataset& test, const StepCallback& on_step) {
  Mlp net(cfg);
  return train_mlp(net, train, test, on_step);
}

MagnitudeProbe probe_magnitudes(Mlp& net, const Matrix& x, const std::vector<int>& labels) {
  net.forward(x);
  net.backward(labels);
  MagnitudeProbe probe;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    probe.activation.push_back(net.outputs()[l].cwiseAbs().mean());
    probe.gradient.push_back(net.output_grads()[l].cwiseAbs().mean());
  }
  return probe;
}

}  // namespace oni::nn
