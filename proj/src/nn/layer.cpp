#include "oni/nn/layer.hpp"

#include <algorithm>
#include <utility>

#include "oni/baselines.hpp"
#include "oni/errors.hpp"
#include "oni/oni_grad.hpp"

namespace oni::nn {

std::string to_string(Method method) {
  switch (method) {
    case Method::plain: return "plain";
    case Method::orth_init: return "orth_init";
    case Method::oni: return "oni";
    case Method::olm_forward: return "olm_forward";
    case Method::wn: return "wn";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::plain, Method::orth_init, Method::oni, Method::olm_forward, Method::wn}) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::BadConfig, "unknown method '" + name + "'");
}

OniLinearLayer::OniLinearLayer(Method method, Matrix z, Vector bias, OniConfig cfg, bool use_gains)
    : method_(method), z_(std::move(z)), bias_(std::move(bias)), cfg_(cfg) {
  cfg_.validate();
  if (bias_.size() != z_.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "bias length must equal the layer's output size");
  }
  if (use_gains) gains_ = Vector::Ones(z_.rows());
}

OniLinearLayer::Forward OniLinearLayer::reparametrize() const {
  Forward out;
  switch (method_) {
    case Method::plain:
    case Method::orth_init:
      out.w_base = z_;
      break;
    case Method::oni: {
      auto result = oni_forward(z_, cfg_);
      out.w_base = std::move(result.w);
      out.oni_cache = std::move(result.cache);
      break;
    }
    case Method::olm_forward: {
      OniConfig surrogate = cfg_;
      surrogate.iterations = std::max(cfg_.iterations, kOlmSurrogateIterations);
      out.oni_cache = oni_forward(z_, surrogate).cache;
      out.w_base = cfg_.scale * olm_orthogonalize(out.oni_cache->v);
      break;
    }
    case Method::wn:
      out.row_norms = z_.rowwise().norm();
      out.w_base = cfg_.scale * weight_normalize(z_);
      break;
  }
  out.w = has_gains() ? Matrix(gains_.asDiagonal() * out.w_base) : out.w_base;
  return out;
}

Matrix OniLinearLayer::forward(const Matrix& x) {
  require_same_shape(x, x.rows(), in_dim(), "layer input");
  if (!cache_ || cache_version_ != version_) {
    cache_ = reparametrize();
    cache_version_ = version_;
  }
  cached_x_ = x;
  Matrix out = x * cache_->w.transpose();
  out.rowwise() += bias_.transpose();
  return out;
}

Matrix OniLinearLayer::effective_weight() const {
  if (cache_ && cache_version_ == version_) return cache_->w;
  return reparametrize().w;
}

LayerGrads OniLinearLayer::backward(const Matrix& x, const Matrix& d_out) const {
  if (!cache_ || cache_version_ != version_) {
    throw Error(ErrorCode::StaleCache, "layer parameters changed since the last forward");
  }
  if (x.rows() != cached_x_.rows() || x.cols() != cached_x_.cols() || x != cached_x_) {
    throw Error(ErrorCode::StaleCache, "backward input differs from the last forward input");
  }
  require_same_shape(d_out, x.rows(), out_dim(), "upstream gradient");

  LayerGrads g;
  const Matrix dw = d_out.transpose() * x;
  g.d_bias = d_out.colwise().sum().transpose();
  g.dx = d_out * cache_->w;

  Matrix dw_base = dw;
  if (has_gains()) {
    g.d_gains = (dw.array() * cache_->w_base.array()).rowwise().sum().matrix();
    dw_base = gains_.asDiagonal() * dw;
  }

  switch (method_) {
    case Method::plain:
    case Method::orth_init:
      g.dz = std::move(dw_base);
      break;
    case Method::oni:
    case Method::olm_forward:
      g.dz = oni_backward(*cache_->oni_cache, dw_base);
      break;
    case Method::wn: {
      // Row i: scale / |z_i| * (dw_i - (dw_i . u_i) u_i), u_i = z_i / |z_i|.
      const Vector inv = cache_->row_norms.cwiseInverse();
      const Matrix u = inv.asDiagonal() * z_;
      const Vector along = (dw_base.array() * u.array()).rowwise().sum().matrix();
      g.dz = cfg_.scale * (inv.asDiagonal() * (dw_base - along.asDiagonal() * u));
      break;
    }
  }
  return g;
}

}  // namespace oni::nn
