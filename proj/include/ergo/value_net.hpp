#pragma once

// Fully connected network with sine activations approximating the value
// function V(x, z, t). Besides V itself it returns exact gradients with
// respect to every input (forward-mode tangents carried through the layers)
// and can back-propagate adjoints of both V and those input gradients into
// the parameters.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace ergo {

struct NetArchitecture {
  int input_dim = 4;
  std::vector<int> hidden = {128, 128, 128};
  double omega = 30.0;  // frequency of every sine layer

  // Affine map of raw inputs onto the network's working coordinates:
  // xi = (input - offset) * scale.
  std::vector<double> input_offset;
  std::vector<double> input_scale;

  // V = output_scale * y + output_offset where y is the last linear layer.
  double output_scale = 1.0;
  double output_offset = 0.0;

  std::size_t parameter_count() const;
  void validate() const;
};

// Batch of points and per-point results. Columns are points.
struct NetBatchOutput {
  Eigen::VectorXd value;  // B
  Eigen::MatrixXd grad;   // input_dim x B, dV/d(raw input)
};

class SineNetwork {
 public:
  SineNetwork() = default;
  // Random initialization with sine-network variance scaling.
  SineNetwork(NetArchitecture arch, std::uint64_t seed);
  SineNetwork(NetArchitecture arch, Eigen::VectorXd params);

  const NetArchitecture& architecture() const { return arch_; }
  int input_dim() const { return arch_.input_dim; }
  const Eigen::VectorXd& parameters() const { return params_; }
  Eigen::VectorXd& mutable_parameters() { return params_; }

  // Single point. grad has input_dim entries.
  double eval(const Eigen::VectorXd& input, Eigen::VectorXd* grad = nullptr) const;

  // inputs: input_dim x B.
  NetBatchOutput eval_batch(const Eigen::MatrixXd& inputs, bool with_grad) const;

  // Cached forward pass used for parameter gradients.
  struct Tape {
    Eigen::Index batch = 0;
    bool with_tangents = false;
    Eigen::MatrixXd xi;                   // input_dim x B
    std::vector<Eigen::MatrixXd> pre;     // per sine layer: [p | p_dot_1 .. p_dot_n]
    std::vector<Eigen::MatrixXd> act;     // per sine layer: [a | a_dot_1 .. a_dot_n]
    NetBatchOutput out;
  };

  Tape forward(const Eigen::MatrixXd& inputs, bool with_tangents) const;

  // Accumulates into param_grad (size parameter_count()) the gradient of
  //   sum_b value_adj(b) * V_b + sum_{b,j} grad_adj(j, b) * dV_b/dinput_j.
  // grad_adj may be empty when the tape has no tangents.
  void backward(const Tape& tape, const Eigen::VectorXd& value_adj,
                const Eigen::MatrixXd& grad_adj, Eigen::VectorXd& param_grad) const;

 private:
  struct LayerView {
    Eigen::Index rows, cols, w_offset, b_offset;
  };
  void build_layout();

  NetArchitecture arch_;
  Eigen::VectorXd params_;
  std::vector<LayerView> layers_;  // sine layers followed by the linear output
};

}  // namespace ergo
