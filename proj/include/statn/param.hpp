#pragma once

#include <cstdint>

#include "statn/tensor.hpp"

namespace statn {

// Constraint tag routing parameter updates: `stiefel` keeps a tall 2D matrix
// column-orthonormal, `centred` keeps a matrix's rows zero-mean.
enum class Constraint { none, stiefel, centred };

struct Param {
  Tensor value;
  Tensor grad;
  Constraint constraint = Constraint::none;
  double learning_rate = 0.01;
  std::int64_t step_count = 0;  // drives the periodic drift check

  Param() = default;
  explicit Param(Tensor v, Constraint c = Constraint::none, double lr = 0.01)
      : value(std::move(v)), constraint(c), learning_rate(lr) {
    grad = Tensor::zeros(value.shape);
  }

  void zero_grad() { grad.fill(0.0); }
};

}  // namespace statn
