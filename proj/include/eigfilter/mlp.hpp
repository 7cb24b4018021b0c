#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "eigfilter/loss.hpp"

namespace eigfilter {

enum class Activation { Tanh, Softplus };
enum class MlpLossKind { Squared, CrossEntropy };
enum class Teacher { Linear, Sine };

/// Row-per-sample dataset. For cross-entropy the targets are one-hot rows.
struct Dataset {
  Matrix inputs;
  Matrix targets;
};

struct SyntheticDataSpec {
  std::size_t n_samples = 64;
  std::size_t input_dim = 2;
  std::size_t output_dim = 1;
  std::uint64_t seed = 0;
  Teacher teacher = Teacher::Sine;
  MlpLossKind loss_kind = MlpLossKind::Squared;
  double target_scale = 1.0;  // regression targets only
};

/// Inputs uniform on [-1, 1]^d. Regression targets come from a random
/// linear or sinusoidal teacher; classification targets are the one-hot
/// argmax of a random linear teacher.
[[nodiscard]] Dataset make_synthetic_dataset(const SyntheticDataSpec& spec);

/// CSV with columns u0..u{d-1}, y0..y{k-1}.
void write_dataset_csv(std::ostream& out, const Dataset& data);

struct MlpSpec {
  std::vector<std::size_t> layers;  // widths, input first, output last
  Activation activation = Activation::Tanh;
  MlpLossKind loss_kind = MlpLossKind::Squared;
};

/// Number of parameters: sum over layers of out * (in + 1).
[[nodiscard]] std::size_t mlp_parameter_count(const std::vector<std::size_t>& layers);

/// Full-batch empirical loss over the flattened parameters. Layer l stores
/// its weight matrix row-major followed by its bias. Hidden layers apply the
/// activation; the output layer is linear.
[[nodiscard]] LossPtr make_mlp_loss(const MlpSpec& spec, Dataset data);

/// Deterministic initialization with weights ~ U(-1, 1) / sqrt(fan_in), zero bias.
[[nodiscard]] Vector mlp_initial_parameters(const std::vector<std::size_t>& layers, std::uint64_t seed);

}  // namespace eigfilter
