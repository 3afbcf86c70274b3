#include "oni/nn/dataset.hpp"

#include <string>

#include "oni/errors.hpp"
#include "oni/random.hpp"

namespace oni::nn {

void Dataset::validate() const {
  if (std::size_t(features.rows()) != labels.size()) {
    throw Error(ErrorCode::CountMismatch, std::to_string(features.rows()) + " samples but " +
                                              std::to_string(labels.size()) + " labels");
  }
  if (classes < 1) {
    throw Error(ErrorCode::BadConfig, "dataset needs at least one class");
  }
  for (int label : labels) {
    if (label < 0 || label >= classes) {
      throw Error(ErrorCode::BadConfig, "label " + std::to_string(label) + " out of range");
    }
  }
}

Dataset synth_dataset(std::uint64_t seed, int n_per_class, int classes, int dim,
                      double separation) {
  if (classes < 2) throw Error(ErrorCode::BadConfig, "synth_dataset needs classes >= 2");
  if (n_per_class < 1) throw Error(ErrorCode::BadConfig, "synth_dataset needs n_per_class >= 1");
  if (dim < classes) throw Error(ErrorCode::BadConfig, "synth_dataset needs dim >= classes");

  Rng rng(seed);
  Dataset out;
  out.classes = classes;
  out.features = rng.normal_matrix(Eigen::Index(n_per_class) * classes, dim);
  out.labels.reserve(std::size_t(n_per_class) * std::size_t(classes));
  for (int c = 0; c < classes; ++c) {
    for (int k = 0; k < n_per_class; ++k) {
      out.features(Eigen::Index(c) * n_per_class + k, c) += separation;
      out.labels.push_back(c);
    }
  }
  return out;
}

}  // namespace oni::nn
