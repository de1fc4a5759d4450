#pragma once

// Spectral ergodic metric machinery: cosine basis on a box, information and
// trajectory coefficients, and the two equivalent forms of the metric (the
// Fourier-coefficient form and the augmented-state form).

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ergo {

// Box [0, L_0] x ... x [0, L_{v-1}].
struct ExplorationSpace {
  std::vector<double> lengths;

  std::size_t dim() const { return lengths.size(); }
  double volume() const;
  void validate() const;

  static ExplorationSpace unit(std::size_t dim = 1) {
    return ExplorationSpace{std::vector<double>(dim, 1.0)};
  }
};

using ModeIndex = std::vector<int>;

// Per-mode real values aligned with BasisSet::modes(). Used for both the
// information coefficients phi_k and the trajectory coefficients c_k.
struct CoeffVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
};

// Per-mode time integrals of the basis deficit F_k(m) - phi_k.
struct AugmentedState {
  std::vector<double> z;

  static AugmentedState zeros(std::size_t n) { return {std::vector<double>(n, 0.0)}; }
  std::size_t size() const { return z.size(); }
  double operator[](std::size_t i) const { return z[i]; }
  double& operator[](std::size_t i) { return z[i]; }
};

class BasisSet {
 public:
  // Throws InvalidArgument for N = 0 or nonpositive lengths.
  BasisSet(ExplorationSpace space, int modes_per_axis);

  const ExplorationSpace& space() const { return space_; }
  int modes_per_axis() const { return n_; }
  std::size_t size() const { return modes_.size(); }
  std::size_t dim() const { return space_.dim(); }

  const std::vector<ModeIndex>& modes() const { return modes_; }
  const std::vector<double>& normalizers() const { return h_; }
  const std::vector<double>& weights() const { return lambda_; }
  double weight(std::size_t i) const { return lambda_[i]; }

  // Position of a mode in the lexicographic ordering.
  std::size_t index_of(const ModeIndex& k) const;

  // F_k(m) = (1/h_k) prod_i cos(k_i pi m_i / L_i).
  double eval(std::size_t mode, std::span<const double> m) const;
  double eval(const ModeIndex& k, std::span<const double> m) const;

  // All modes at once; out.size() == size().
  void eval_all(std::span<const double> m, std::span<double> out) const;

  // Gradient of every mode with respect to m: grad[mode * dim + i].
  void eval_all_with_grad(std::span<const double> m, std::span<double> out,
                          std::span<double> grad) const;

 private:
  ExplorationSpace space_;
  int n_;
  std::vector<ModeIndex> modes_;
  std::vector<double> h_;
  std::vector<double> lambda_;
};

// Target information density on the exploration space.
class InfoDistribution {
 public:
  enum class Kind { kUniform, kGaussianMixture };

  struct Component {
    std::vector<double> mean;
    double std = 0.1;
    double weight = 1.0;
  };

  static InfoDistribution uniform(const ExplorationSpace& space);

  // Mixture of isotropic Gaussians truncated to the box and renormalized
  // numerically so the density integrates to one over the box. Throws
  // QuadratureError if the quadrature rule cannot resolve the mixture.
  static InfoDistribution gaussian_mixture(const ExplorationSpace& space,
                                           std::vector<Component> components);

  // Equal-weight modes at 0.25 L and 0.75 L with std 0.1 L (first axis),
  // centred on the other axes.
  static InfoDistribution bimodal(const ExplorationSpace& space);

  Kind kind() const { return kind_; }
  const std::vector<Component>& components() const { return components_; }
  double normalization() const { return normalization_; }
  const ExplorationSpace& space() const { return space_; }

  double density(std::span<const double> m) const;

  std::string describe() const;

 private:
  InfoDistribution(ExplorationSpace space, Kind kind, std::vector<Component> comps);
  double raw_density(std::span<const double> m) const;

  ExplorationSpace space_;
  Kind kind_;
  std::vector<Component> components_;
  double normalization_ = 1.0;
};

// Nodes per axis for every density/basis integral.
inline constexpr std::size_t kQuadratureNodes = 64;

// phi_k = int_M F_k(m) phi(m) dm. Throws QuadratureError if the quadrature
// estimate of int phi dm is off by more than 1e-4.
CoeffVector info_coeffs(const BasisSet& basis, const InfoDistribution& phi);

// Uniformly sampled trajectory in exploration coordinates: sample i lies at
// times[i]; points[i] has basis.dim() coordinates.
struct SampledTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> points;
};

// c_k = 1/(t_n - t_0) sum_{i<n} F_k(m_i) dt (left Riemann sum).
// Rejects fewer than two samples and nonuniform timestamps.
CoeffVector traj_coeffs(const BasisSet& basis, const SampledTrajectory& traj);

// sum_k Lambda_k (c_k - phi_k)^2.
double ergodic_metric_spectral(const CoeffVector& c, const CoeffVector& phi_k,
                               const BasisSet& basis);

// z_dot_k = F_k(m) - phi_k.
std::vector<double> aug_derivative(const BasisSet& basis, const CoeffVector& phi_k,
                                   std::span<const double> m);

// Metric recovered from the augmented state. z_k = duration (c_k - phi_k),
// so this is (1/duration^2) sum_k Lambda_k z_k^2; it agrees with the
// (1/duration) form of the Bolza terminal cost only for unit duration.
double ergodic_metric_from_aug(const AugmentedState& z, double duration,
                               const BasisSet& basis);

// sum_k Lambda_k z_k^2 without the duration factor.
double weighted_square_norm(std::span<const double> z, const BasisSet& basis);

}  // namespace ergo
