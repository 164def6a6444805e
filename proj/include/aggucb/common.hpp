#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace aggucb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixMap = Eigen::Map<RowMatrix>;
using ConstRowMatrixMap = Eigen::Map<const RowMatrix>;

// Error hierarchy. Everything derives from std::runtime_error or
// std::invalid_argument so callers that don't care can catch the std types.

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyGroupError : public std::runtime_error {
 public:
  explicit EmptyGroupError(int group)
      : std::runtime_error("arm group " + std::to_string(group) + " has no observed contexts"),
        group_(group) {}
  int group() const noexcept { return group_; }

 private:
  int group_;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int step, double loss)
      : std::runtime_error("training diverged at step " + std::to_string(step) +
                           " (loss=" + std::to_string(loss) + ")"),
        step_(step),
        loss_(loss) {}
  int step() const noexcept { return step_; }
  double loss() const noexcept { return loss_; }

 private:
  int step_;
  double loss_;
};

}  // namespace aggucb
