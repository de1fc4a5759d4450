#include "ergo/value_net.hpp"

#include <cmath>
#include <random>

#include "ergo/error.hpp"

namespace ergo {

std::size_t NetArchitecture::parameter_count() const {
  std::size_t count = 0;
  int prev = input_dim;
  for (int h : hidden) {
    count += static_cast<std::size_t>(h) * prev + h;
    prev = h;
  }
  return count + static_cast<std::size_t>(prev) + 1;
}

void NetArchitecture::validate() const {
  require(input_dim >= 1, "NetArchitecture: input_dim must be positive");
  require(!hidden.empty(), "NetArchitecture: need at least one hidden layer");
  for (int h : hidden) require(h >= 1, "NetArchitecture: hidden sizes must be positive");
  require(omega > 0.0, "NetArchitecture: omega must be positive");
  require(input_offset.size() == static_cast<std::size_t>(input_dim) &&
              input_scale.size() == static_cast<std::size_t>(input_dim),
          "NetArchitecture: input normalization has wrong size");
}

SineNetwork::SineNetwork(NetArchitecture arch, std::uint64_t seed) : arch_(std::move(arch)) {
  if (arch_.input_offset.empty()) arch_.input_offset.assign(arch_.input_dim, 0.0);
  if (arch_.input_scale.empty()) arch_.input_scale.assign(arch_.input_dim, 1.0);
  arch_.validate();
  build_layout();

  params_.resize(static_cast<Eigen::Index>(arch_.parameter_count()));
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerView& L = layers_[l];
    const double fan_in = static_cast<double>(L.cols);
    const double w_bound = l == 0 ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / arch_.omega;
    const double b_bound = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> wdist(-w_bound, w_bound);
    std::uniform_real_distribution<double> bdist(-b_bound, b_bound);
    for (Eigen::Index i = 0; i < L.rows * L.cols; ++i) params_[L.w_offset + i] = wdist(rng);
    for (Eigen::Index i = 0; i < L.rows; ++i) params_[L.b_offset + i] = bdist(rng);
  }
}

SineNetwork::SineNetwork(NetArchitecture arch, Eigen::VectorXd params)
    : arch_(std::move(arch)), params_(std::move(params)) {
  arch_.validate();
  build_layout();
  require(static_cast<std::size_t>(params_.size()) == arch_.parameter_count(),
          "SineNetwork: parameter vector has wrong length");
}

void SineNetwork::build_layout() {
  layers_.clear();
  Eigen::Index offset = 0;
  Eigen::Index prev = arch_.input_dim;
  auto push = [&](Eigen::Index rows) {
    LayerView L{rows, prev, offset, offset + rows * prev};
    offset += rows * prev + rows;
    layers_.push_back(L);
    prev = rows;
  };
  for (int h : arch_.hidden) push(h);
  push(1);
}

SineNetwork::Tape SineNetwork::forward(const Eigen::MatrixXd& inputs, bool with_tangents) const {
  require(inputs.rows() == arch_.input_dim, "SineNetwork: input dimension mismatch");
  const Eigen::Index B = inputs.cols();
  const Eigen::Index n = arch_.input_dim;
  const Eigen::Index blocks = with_tangents ? n + 1 : 1;
  const double omega = arch_.omega;

  Tape tape;
  tape.batch = B;
  tape.with_tangents = with_tangents;
  const Eigen::Map<const Eigen::VectorXd> offset(arch_.input_offset.data(), n);
  const Eigen::Map<const Eigen::VectorXd> scale(arch_.input_scale.data(), n);
  tape.xi = (inputs.colwise() - offset).array().colwise() * scale.array();

  const std::size_t sine_layers = layers_.size() - 1;
  tape.pre.resize(sine_layers);
  tape.act.resize(sine_layers);
  for (std::size_t l = 0; l < sine_layers; ++l) {
    const LayerView& L = layers_[l];
    const Eigen::Map<const Eigen::MatrixXd> W(params_.data() + L.w_offset, L.rows, L.cols);
    const Eigen::Map<const Eigen::VectorXd> b(params_.data() + L.b_offset, L.rows);

    Eigen::MatrixXd& Z = tape.pre[l];
    if (l == 0) {
      Z.resize(L.rows, B * blocks);
      Z.leftCols(B).noalias() = omega * (W * tape.xi);
      if (with_tangents) {
        for (Eigen::Index j = 0; j < n; ++j) {
          Z.middleCols(B * (j + 1), B) = (omega * W.col(j)).replicate(1, B);
        }
      }
    } else {
      Z.noalias() = omega * (W * tape.act[l - 1]);
    }
    Z.leftCols(B).colwise() += omega * b;

    Eigen::MatrixXd& A = tape.act[l];
    A.resize(L.rows, B * blocks);
    A.leftCols(B) = Z.leftCols(B).array().sin();
    if (with_tangents) {
      const Eigen::ArrayXXd c = Z.leftCols(B).array().cos();
      for (Eigen::Index j = 1; j < blocks; ++j) {
        A.middleCols(B * j, B) = c * Z.middleCols(B * j, B).array();
      }
    }
  }

  const LayerView& out = layers_.back();
  const Eigen::Map<const Eigen::RowVectorXd> w(params_.data() + out.w_offset, out.cols);
  const double c = params_[out.b_offset];
  const Eigen::RowVectorXd y = w * tape.act.back();

  tape.out.value = (arch_.output_scale * (y.leftCols(B).array() + c) + arch_.output_offset)
                       .transpose()
                       .matrix();
  if (with_tangents) {
    tape.out.grad.resize(n, B);
    for (Eigen::Index j = 0; j < n; ++j) {
      tape.out.grad.row(j) =
          arch_.output_scale * arch_.input_scale[j] * y.middleCols(B * (j + 1), B);
    }
  }
  return tape;
}

void SineNetwork::backward(const Tape& tape, const Eigen::VectorXd& value_adj,
                        const Eigen::MatrixXd& grad_adj, Eigen::VectorXd& param_grad) const {
  const Eigen::Index B = tape.batch;
  const Eigen::Index n = arch_.input_dim;
  const bool tang = tape.with_tangents && grad_adj.size() > 0;
  require(value_adj.size() == B, "SineNetwork::backward: value adjoint has wrong size");
  if (tang) {
    require(grad_adj.rows() == n && grad_adj.cols() == B,
            "SineNetwork::backward: gradient adjoint has wrong shape");
  }
  require(static_cast<std::size_t>(param_grad.size()) == arch_.parameter_count(),
          "SineNetwork::backward: parameter gradient has wrong size");
  const Eigen::Index blocks = tang ? n + 1 : 1;
  const double omega = arch_.omega;

  // Adjoint of the last linear layer's output, one block per tangent.
  Eigen::RowVectorXd ybar(B * blocks);
  ybar.leftCols(B) = arch_.output_scale * value_adj.transpose();
  for (Eigen::Index j = 0; j < n && tang; ++j) {
    ybar.middleCols(B * (j + 1), B) =
        arch_.output_scale * arch_.input_scale[j] * grad_adj.row(j);
  }

  const LayerView& out = layers_.back();
  const Eigen::Map<const Eigen::RowVectorXd> w(params_.data() + out.w_offset, out.cols);
  const Eigen::MatrixXd& last_act = tape.act.back();
  param_grad.segment(out.w_offset, out.cols).noalias() +=
      (ybar * last_act.leftCols(B * blocks).transpose()).transpose();
  param_grad[out.b_offset] += ybar.leftCols(B).sum();

  Eigen::MatrixXd abar = w.transpose() * ybar;
  Eigen::MatrixXd zbar;
  for (std::size_t l = tape.act.size(); l-- > 0;) {
    const LayerView& L = layers_[l];
    const Eigen::Map<const Eigen::MatrixXd> W(params_.data() + L.w_offset, L.rows, L.cols);
    const Eigen::MatrixXd& Z = tape.pre[l];
    const Eigen::ArrayXXd s = Z.leftCols(B).array().sin();
    const Eigen::ArrayXXd c = Z.leftCols(B).array().cos();

    zbar.resize(L.rows, B * blocks);
    zbar.leftCols(B) = abar.leftCols(B).array() * c;
    for (Eigen::Index j = 1; j < blocks; ++j) {
      zbar.leftCols(B).array() -= abar.middleCols(B * j, B).array() * s *
                                  Z.middleCols(B * j, B).array();
      zbar.middleCols(B * j, B) = abar.middleCols(B * j, B).array() * c;
    }

    Eigen::Map<Eigen::MatrixXd> Wbar(param_grad.data() + L.w_offset, L.rows, L.cols);
    param_grad.segment(L.b_offset, L.rows) += omega * zbar.leftCols(B).rowwise().sum();
    if (l == 0) {
      Wbar.noalias() += omega * (zbar.leftCols(B) * tape.xi.transpose());
      for (Eigen::Index j = 1; j < blocks; ++j) {
        Wbar.col(j - 1) += omega * zbar.middleCols(B * j, B).rowwise().sum();
      }
    } else {
      const Eigen::MatrixXd& prev = tape.act[l - 1];
      Wbar.noalias() += omega * (zbar * prev.leftCols(B * blocks).transpose());
      abar.noalias() = omega * (W.transpose() * zbar);
    }
  }
}

NetBatchOutput SineNetwork::eval_batch(const Eigen::MatrixXd& inputs, bool with_grad) const {
  return forward(inputs, with_grad).out;
}

double SineNetwork::eval(const Eigen::VectorXd& input, Eigen::VectorXd* grad) const {
  const NetBatchOutput out = eval_batch(input, grad != nullptr);
  if (grad) *grad = out.grad.col(0);
  return out.value[0];
}

}  // namespace ergo
