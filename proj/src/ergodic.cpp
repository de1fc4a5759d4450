#include "ergo/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ergo/error.hpp"
#include "ergo/quadrature.hpp"

namespace ergo {

double ExplorationSpace::volume() const {
  double v = 1.0;
  for (double l : lengths) v *= l;
  return v;
}

void ExplorationSpace::validate() const {
  require(!lengths.empty(), "ExplorationSpace: dim must be >= 1");
  for (double l : lengths) {
    require(std::isfinite(l) && l > 0.0, "ExplorationSpace: lengths must be positive");
  }
}

BasisSet::BasisSet(ExplorationSpace space, int modes_per_axis)
    : space_(std::move(space)), n_(modes_per_axis) {
  space_.validate();
  require(n_ >= 1, "BasisSet: modes per axis must be >= 1");

  const std::size_t v = space_.dim();
  const double s = (static_cast<double>(v) + 1.0) / 2.0;

  ModeIndex k(v, 0);
  while (true) {
    modes_.push_back(k);
    double h2 = 1.0;
    double norm2 = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
      h2 *= k[i] == 0 ? space_.lengths[i] : 0.5 * space_.lengths[i];
      norm2 += static_cast<double>(k[i]) * k[i];
    }
    h_.push_back(std::sqrt(h2));
    lambda_.push_back(std::pow(1.0 + norm2, -s));

    std::size_t d = v;
    while (d > 0) {
      --d;
      if (++k[d] < n_) break;
      k[d] = 0;
      if (d == 0) return;
    }
  }
}

std::size_t BasisSet::index_of(const ModeIndex& k) const {
  require(k.size() == dim(), "ModeIndex: wrong dimension");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    require(k[i] >= 0 && k[i] < n_, "ModeIndex: entry out of range");
    idx = idx * static_cast<std::size_t>(n_) + static_cast<std::size_t>(k[i]);
  }
  return idx;
}

double BasisSet::eval(std::size_t mode, std::span<const double> m) const {
  const ModeIndex& k = modes_[mode];
  double f = 1.0 / h_[mode];
  for (std::size_t i = 0; i < k.size(); ++i) {
    f *= std::cos(k[i] * std::numbers::pi * m[i] / space_.lengths[i]);
  }
  return f;
}

double BasisSet::eval(const ModeIndex& k, std::span<const double> m) const {
  return eval(index_of(k), m);
}

void BasisSet::eval_all(std::span<const double> m, std::span<double> out) const {
  const std::size_t v = dim();
  if (v == 1) {
    const double arg = std::numbers::pi * m[0] / space_.lengths[0];
    for (std::size_t j = 0; j < modes_.size(); ++j) {
      out[j] = std::cos(static_cast<double>(j) * arg) / h_[j];
    }
    return;
  }
  for (std::size_t j = 0; j < modes_.size(); ++j) out[j] = eval(j, m);
}

void BasisSet::eval_all_with_grad(std::span<const double> m, std::span<double> out,
                                  std::span<double> grad) const {
  const std::size_t v = dim();
  for (std::size_t j = 0; j < modes_.size(); ++j) {
    const ModeIndex& k = modes_[j];
    double prod = 1.0 / h_[j];
    for (std::size_t i = 0; i < v; ++i) {
      const double w = k[i] * std::numbers::pi / space_.lengths[i];
      double g = -w * std::sin(w * m[i]) / h_[j];
      for (std::size_t l = 0; l < v; ++l) {
        if (l != i) g *= std::cos(k[l] * std::numbers::pi * m[l] / space_.lengths[l]);
      }
      grad[j * v + i] = g;
      prod *= std::cos(w * m[i]);
    }
    out[j] = prod;
  }
}

// -- InfoDistribution --------------------------------------------------------

InfoDistribution::InfoDistribution(ExplorationSpace space, Kind kind,
                                   std::vector<Component> comps)
    : space_(std::move(space)), kind_(kind), components_(std::move(comps)) {
  space_.validate();
  if (kind_ == Kind::kUniform) {
    normalization_ = 1.0 / space_.volume();
    return;
  }
  require(!components_.empty(), "InfoDistribution: mixture needs components");
  for (const auto& c : components_) {
    require(c.mean.size() == space_.dim(), "InfoDistribution: mean has wrong dimension");
    require(c.std > 0.0 && c.weight > 0.0,
            "InfoDistribution: std and weight must be positive");
  }
  auto mass_with = [&](std::size_t nodes) {
    const TensorGrid grid(space_.lengths, nodes);
    double mass = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      mass += grid.weight(i) * raw_density({grid.point(i), space_.dim()});
    }
    return mass;
  };
  const double mass = mass_with(kQuadratureNodes);
  if (!(mass > 0.0)) throw QuadratureError("InfoDistribution: zero mass on the box");
  // A density too narrow for the rule shows up as disagreement with a finer one.
  const double fine = mass_with(2 * kQuadratureNodes);
  if (std::abs(mass / fine - 1.0) > 1e-4) {
    throw QuadratureError("InfoDistribution: density not resolved by " +
                          std::to_string(kQuadratureNodes) + " quadrature nodes per axis");
  }
  normalization_ = 1.0 / mass;
}

InfoDistribution InfoDistribution::uniform(const ExplorationSpace& space) {
  return InfoDistribution(space, Kind::kUniform, {});
}

InfoDistribution InfoDistribution::gaussian_mixture(const ExplorationSpace& space,
                                                    std::vector<Component> components) {
  return InfoDistribution(space, Kind::kGaussianMixture, std::move(components));
}

InfoDistribution InfoDistribution::bimodal(const ExplorationSpace& space) {
  space.validate();
  std::vector<Component> comps(2);
  for (int c = 0; c < 2; ++c) {
    comps[c].mean.resize(space.dim());
    for (std::size_t i = 0; i < space.dim(); ++i) comps[c].mean[i] = 0.5 * space.lengths[i];
    comps[c].mean[0] = (c == 0 ? 0.25 : 0.75) * space.lengths[0];
    comps[c].std = 0.1 * space.lengths[0];
    comps[c].weight = 0.5;
  }
  return gaussian_mixture(space, std::move(comps));
}

double InfoDistribution::raw_density(std::span<const double> m) const {
  double total = 0.0;
  const double v = static_cast<double>(space_.dim());
  for (const auto& c : components_) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double d = m[i] - c.mean[i];
      r2 += d * d;
    }
    const double norm = std::pow(2.0 * std::numbers::pi * c.std * c.std, -0.5 * v);
    total += c.weight * norm * std::exp(-0.5 * r2 / (c.std * c.std));
  }
  return total;
}

double InfoDistribution::density(std::span<const double> m) const {
  if (kind_ == Kind::kUniform) return normalization_;
  return normalization_ * raw_density(m);
}

std::string InfoDistribution::describe() const {
  std::ostringstream os;
  if (kind_ == Kind::kUniform) {
    os << "uniform";
    return os.str();
  }
  os << "gaussian-mixture[";
  for (std::size_t c = 0; c < components_.size(); ++c) {
    if (c) os << ";";
    os << "mean=";
    for (std::size_t i = 0; i < components_[c].mean.size(); ++i) {
      os << (i ? "," : "") << components_[c].mean[i];
    }
    os << " std=" << components_[c].std << " w=" << components_[c].weight;
  }
  os << "]";
  return os.str();
}

// -- coefficients and metrics ------------------------------------------------

CoeffVector info_coeffs(const BasisSet& basis, const InfoDistribution& phi) {
  require(phi.space().lengths == basis.space().lengths,
          "info_coeffs: distribution and basis live on different spaces");
  const TensorGrid grid(basis.space().lengths, kQuadratureNodes);
  const std::size_t v = basis.dim();

  CoeffVector out{std::vector<double>(basis.size(), 0.0)};
  std::vector<double> f(basis.size());
  double mass = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::span<const double> m(grid.point(i), v);
    const double w = grid.weight(i) * phi.density(m);
    mass += w;
    basis.eval_all(m, f);
    for (std::size_t j = 0; j < f.size(); ++j) out.values[j] += w * f[j];
  }
  if (std::abs(mass - 1.0) > 1e-4) {
    throw QuadratureError("info_coeffs: density integrates to " + std::to_string(mass));
  }
  return out;
}

CoeffVector traj_coeffs(const BasisSet& basis, const SampledTrajectory& traj) {
  const std::size_t n = traj.times.size();
  require(n >= 2, "traj_coeffs: need at least two samples");
  require(traj.points.size() == n, "traj_coeffs: times/points length mismatch");
  const double dt = traj.times[1] - traj.times[0];
  require(dt > 0.0, "traj_coeffs: timestamps must increase");
  for (std::size_t i = 1; i < n; ++i) {
    const double step = traj.times[i] - traj.times[i - 1];
    if (std::abs(step - dt) > 1e-9 * std::max(1.0, std::abs(dt))) {
      throw InvalidArgument("traj_coeffs: nonuniform timestep");
    }
  }

  CoeffVector out{std::vector<double>(basis.size(), 0.0)};
  std::vector<double> f(basis.size());
  for (std::size_t i = 0; i + 1 < n; ++i) {
    require(traj.points[i].size() == basis.dim(), "traj_coeffs: point has wrong dimension");
    basis.eval_all(traj.points[i], f);
    for (std::size_t j = 0; j < f.size(); ++j) out.values[j] += f[j] * dt;
  }
  const double duration = dt * static_cast<double>(n - 1);
  for (double& c : out.values) c /= duration;
  return out;
}

double ergodic_metric_spectral(const CoeffVector& c, const CoeffVector& phi_k,
                               const BasisSet& basis) {
  require(c.size() == basis.size() && phi_k.size() == basis.size(),
          "ergodic_metric_spectral: coefficient vectors not aligned with basis");
  double e = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    const double d = c[j] - phi_k[j];
    e += basis.weight(j) * d * d;
  }
  return e;
}

std::vector<double> aug_derivative(const BasisSet& basis, const CoeffVector& phi_k,
                                   std::span<const double> m) {
  require(phi_k.size() == basis.size(), "aug_derivative: phi_k not aligned with basis");
  std::vector<double> zdot(basis.size());
  basis.eval_all(m, zdot);
  for (std::size_t j = 0; j < zdot.size(); ++j) zdot[j] -= phi_k[j];
  return zdot;
}

double weighted_square_norm(std::span<const double> z, const BasisSet& basis) {
  require(z.size() == basis.size(), "weighted_square_norm: z not aligned with basis");
  double s = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) s += basis.weight(j) * z[j] * z[j];
  return s;
}

double ergodic_metric_from_aug(const AugmentedState& z, double duration,
                               const BasisSet& basis) {
  require(duration > 0.0, "ergodic_metric_from_aug: duration must be positive");
  return weighted_square_norm(z.z, basis) / (duration * duration);
}

}  // namespace ergo
