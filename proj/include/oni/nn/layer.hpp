#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "oni/matrix_kernels.hpp"
#include "oni/oni.hpp"

namespace oni::nn {

/// How a layer turns its trainable matrix z into the weight it applies.
enum class Method { plain, orth_init, oni, olm_forward, wn };

std::string to_string(Method method);
/// Throws BadConfig for unknown names.
Method parse_method(const std::string& name);

struct LayerGrads {
  Matrix dz;
  Vector d_bias;
  Vector d_gains;  // empty when the layer has no gains
  Matrix dx;
};

/// Fully connected layer h = x w^T + b with w derived from the proxy z.
///
///   plain, orth_init  w = z
///   oni               w = oni_forward(z, cfg).w
///   olm_forward       w = scale * olm_orthogonalize(bounded z); gradients use
///                     the ONI adjoint at kOlmSurrogateIterations
///   wn                w = scale * z with unit rows
///
/// With gains, every row of w is multiplied by its gain. Mutable access to
/// the parameters invalidates the cached forward pass.
class OniLinearLayer {
 public:
  static constexpr int kOlmSurrogateIterations = 30;

  OniLinearLayer(Method method, Matrix z, Vector bias, OniConfig cfg, bool use_gains = false);

  /// x is batch x in_dim; returns batch x out_dim.
  Matrix forward(const Matrix& x);

  /// Gradients for the batch x seen by the latest forward. Throws StaleCache
  /// when there was no forward, the parameters changed since, or x differs.
  LayerGrads backward(const Matrix& x, const Matrix& d_out) const;

  /// Weight as used by the latest forward (recomputed if stale).
  Matrix effective_weight() const;

  Method method() const { return method_; }
  const OniConfig& config() const { return cfg_; }
  Eigen::Index in_dim() const { return z_.cols(); }
  Eigen::Index out_dim() const { return z_.rows(); }
  bool has_gains() const { return gains_.size() > 0; }

  const Matrix& z() const { return z_; }
  const Vector& bias() const { return bias_; }
  const Vector& gains() const { return gains_; }
  Matrix& mutable_z() { ++version_; return z_; }
  Vector& mutable_bias() { ++version_; return bias_; }
  Vector& mutable_gains() { ++version_; return gains_; }
  std::uint64_t version() const { return version_; }

 private:
  struct Forward {
    Matrix w_base;  // before gains
    Matrix w;       // applied weight
    std::optional<OniCache<double>> oni_cache;
    Vector row_norms;  // wn only
  };

  Forward reparametrize() const;

  Method method_;
  Matrix z_;
  Vector bias_;
  Vector gains_;
  OniConfig cfg_;
  std::uint64_t version_ = 0;

  std::optional<Forward> cache_;
  Matrix cached_x_;
  std::uint64_t cache_version_ = 0;
};

}  // namespace oni::nn
