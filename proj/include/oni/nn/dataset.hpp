#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oni/matrix_kernels.hpp"

namespace oni::nn {

/// Samples are rows of `features`; labels are class indices in [0, classes).
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int classes = 0;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }

  /// Throws CountMismatch / BadConfig when the fields disagree.
  void validate() const;
};

/// Gaussian blobs: class c ~ N(separation * e_c, I) in `dim` dimensions, so
/// every pair of class means is separation * sqrt(2) apart. Samples come out
/// class-major; deterministic per seed.
Dataset synth_dataset(std::uint64_t seed, int n_per_class, int classes, int dim,
                      double separation);

/// IDX containers (the MNIST family format). Image pixels are scaled by
/// 1/255 and flattened row-major.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

void write_idx_images(const std::string& path, const std::vector<std::uint8_t>& pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols);
void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

}  // namespace oni::nn
