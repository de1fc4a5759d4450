#include "ergo/hji.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "ergo/error.hpp"

namespace ergo {

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

std::string fmt_double(double v, int digits = 17) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

NetMetadata NetMetadata::from_problem(const Problem& p, const SampleBox& box,
                                      std::uint64_t seed) {
  NetMetadata m;
  m.modes_per_axis = p.basis.modes_per_axis();
  m.lengths = p.basis.space().lengths;
  m.info = p.info.describe();
  m.phi_k = p.phi_k.values;
  m.u_max = p.bounds.u_max;
  m.d_max = p.bounds.d_max;
  m.cost = p.cost;
  m.t0 = 0.0;
  m.tf = p.horizon();
  m.box = box;
  m.seed = seed;
  return m;
}

std::string NetMetadata::fingerprint() const {
  std::ostringstream os;
  os << "N=" << modes_per_axis << ";L=";
  for (double l : lengths) os << fmt_double(l) << ",";
  os << ";info=" << info << ";phi=";
  // Derived by quadrature, so compared at 12 digits to stay stable across
  // builds that contract floating-point operations differently.
  for (double v : phi_k) os << fmt_double(v, 12) << ",";
  os << ";u_max=" << fmt_double(u_max) << ";d_max=" << fmt_double(d_max)
     << ";q=" << fmt_double(cost.q) << ";R=" << fmt_double(cost.R)
     << ";bw=" << fmt_double(cost.barrier_weight) << ";bm=" << fmt_double(cost.barrier_margin)
     << ";t0=" << fmt_double(t0) << ";tf=" << fmt_double(tf);
  return os.str();
}

void ValueNet::check_compatible(const Problem& p) const {
  const NetMetadata expected = NetMetadata::from_problem(p, meta.box, meta.seed);
  if (expected.fingerprint() != meta.fingerprint()) {
    throw FingerprintMismatch("value net was trained for a different problem:\n  net:     " +
                              meta.fingerprint() + "\n  problem: " + expected.fingerprint());
  }
}

Eigen::VectorXd net_input(const SamplePoint& s) {
  Eigen::VectorXd in(static_cast<Eigen::Index>(s.z.size()) + 3);
  in[0] = s.x.x1;
  in[1] = s.x.x2;
  for (std::size_t i = 0; i < s.z.size(); ++i) in[static_cast<Eigen::Index>(i) + 2] = s.z[i];
  in[in.size() - 1] = s.t;
  return in;
}

std::vector<double> active_z(const Problem& p, const AugmentedState& z) {
  require(z.size() == p.basis.size(), "active_z: augmented state not aligned with basis");
  std::vector<double> out;
  out.reserve(p.active_modes().size());
  for (std::size_t j : p.active_modes()) out.push_back(z[j]);
  return out;
}

ValueNet make_value_net(const Problem& p, const SampleBox& box, std::vector<int> hidden,
                        double omega, std::uint64_t seed) {
  const std::size_t nz = p.active_modes().size();
  NetArchitecture arch;
  arch.input_dim = static_cast<int>(nz + 3);
  arch.hidden = std::move(hidden);
  arch.omega = omega;
  auto push = [&](Interval iv) {
    require(iv.hi > iv.lo, "SampleBox: empty interval");
    arch.input_offset.push_back(0.5 * (iv.hi + iv.lo));
    arch.input_scale.push_back(2.0 / iv.width());
  };
  push(box.x1);
  push(box.x2);
  for (std::size_t i = 0; i < nz; ++i) push(box.z);
  push(Interval{0.0, p.horizon()});
  return ValueNet{SineNetwork(std::move(arch), seed), NetMetadata::from_problem(p, box, seed)};
}

ValueGradients net_eval_with_grads(const ValueNet& net, const SamplePoint& s) {
  const Eigen::VectorXd in = net_input(s);
  require(in.size() == net.net.input_dim(), "net_eval_with_grads: dimension mismatch");
  Eigen::VectorXd g;
  ValueGradients out;
  out.value = net.net.eval(in, &g);
  out.dx1 = g[0];
  out.dx2 = g[1];
  out.dz.assign(g.data() + 2, g.data() + g.size() - 1);
  out.dt = g[g.size() - 1];
  return out;
}

double opt_control_from_costate(double costate, double R, double u_max) {
  require(R > 0.0, "opt_control_from_costate: R must be positive");
  return std::clamp(-costate / (2.0 * R), -u_max, u_max);
}

double worst_case_disturbance(double u_star, double d_max) {
  return u_star > 0.0 ? -d_max : d_max;
}

namespace {

// Running-cost part that does not depend on u, plus the z-transport term.
struct StateTerms {
  double state_cost = 0.0;  // q sum Lambda z^2 + barrier
  double transport = 0.0;   // sum dV/dz_k (F_k - phi_k)
};

StateTerms state_terms(const SamplePoint& s, std::span<const double> dz, const Problem& p,
                       std::vector<double>& basis_buf, std::vector<double>* zdot = nullptr) {
  const auto& active = p.active_modes();
  require(s.z.size() == active.size() && dz.size() == active.size(),
          "hamiltonian: augmented coordinates do not match the problem's active modes");
  basis_buf.resize(p.basis.size());
  const double m = exploration_map(s.x);
  p.basis.eval_all(std::span<const double>(&m, 1), basis_buf);

  StateTerms out;
  double wz = 0.0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const std::size_t j = active[i];
    wz += p.basis.weight(j) * s.z[i] * s.z[i];
    const double rate = basis_buf[j] - p.phi_k[j];
    out.transport += dz[i] * rate;
    if (zdot) (*zdot)[i] = rate;
  }
  out.state_cost = p.cost.q * wz + barrier(s.x, p.basis.space(), p.cost);
  return out;
}

}  // namespace

double hamiltonian(const SamplePoint& s, const ValueGradients& g, double u, double d,
                   const Problem& p) {
  std::vector<double> buf;
  const StateTerms st = state_terms(s, g.dz, p, buf);
  return st.state_cost + u * p.cost.R * u + g.dx1 * s.x.x2 + g.dx2 * (u + d) + st.transport;
}

HamiltonianValue hamiltonian_optimal(const SamplePoint& s, const ValueGradients& g,
                                     const Problem& p) {
  HamiltonianValue out;
  out.u = opt_control_from_costate(g.dx2, p.cost.R, p.bounds.u_max);
  out.d = g.dx2 < 0.0 ? -p.bounds.d_max : p.bounds.d_max;
  out.value = hamiltonian(s, g, out.u, out.d, p);
  return out;
}

namespace {

Eigen::MatrixXd batch_inputs(const std::vector<SamplePoint>& pts, int input_dim,
                             const double* t_override) {
  Eigen::MatrixXd in(input_dim, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t b = 0; b < pts.size(); ++b) {
    const SamplePoint& s = pts[b];
    require(static_cast<int>(s.z.size()) + 3 == input_dim,
            "loss: sample dimension does not match the network");
    const auto col = static_cast<Eigen::Index>(b);
    in(0, col) = s.x.x1;
    in(1, col) = s.x.x2;
    for (std::size_t i = 0; i < s.z.size(); ++i) in(static_cast<Eigen::Index>(i) + 2, col) = s.z[i];
    in(input_dim - 1, col) = t_override ? *t_override : s.t;
  }
  return in;
}

double terminal_target(const SamplePoint& s, const Problem& p) {
  double wz = 0.0;
  const auto& active = p.active_modes();
  for (std::size_t i = 0; i < active.size(); ++i) {
    wz += p.basis.weight(active[i]) * s.z[i] * s.z[i];
  }
  return wz / p.horizon();
}

// Mean |residual| and, when grad_adj is given, its adjoint with respect to
// the input gradients scaled by `weight`.
double residual_pass(const NetBatchOutput& out, const std::vector<SamplePoint>& pts,
                     const Problem& p, double weight, Eigen::MatrixXd* grad_adj) {
  const Eigen::Index n = out.grad.rows();
  const auto B = static_cast<double>(pts.size());
  std::vector<double> buf;
  std::vector<double> zdot(p.active_modes().size());
  ValueGradients g;
  g.dz.resize(zdot.size());
  double sum = 0.0;
  for (std::size_t b = 0; b < pts.size(); ++b) {
    const auto col = static_cast<Eigen::Index>(b);
    g.dx1 = out.grad(0, col);
    g.dx2 = out.grad(1, col);
    for (std::size_t i = 0; i < zdot.size(); ++i) {
      g.dz[i] = out.grad(static_cast<Eigen::Index>(i) + 2, col);
    }
    g.dt = out.grad(n - 1, col);

    const SamplePoint& s = pts[b];
    const StateTerms st = state_terms(s, g.dz, p, buf, &zdot);
    const double u = opt_control_from_costate(g.dx2, p.cost.R, p.bounds.u_max);
    const double d = g.dx2 < 0.0 ? -p.bounds.d_max : p.bounds.d_max;
    const double h = st.state_cost + u * p.cost.R * u + g.dx1 * s.x.x2 + g.dx2 * (u + d) +
                     st.transport;
    const double r = g.dt + h;
    sum += std::abs(r);

    if (grad_adj) {
      const double a = weight * sgn(r) / B;
      (*grad_adj)(0, col) = a * s.x.x2;
      (*grad_adj)(1, col) = a * (u + d);  // envelope: dH*/dp = u* + d*
      for (std::size_t i = 0; i < zdot.size(); ++i) {
        (*grad_adj)(static_cast<Eigen::Index>(i) + 2, col) = a * zdot[i];
      }
      (*grad_adj)(n - 1, col) = a;
    }
  }
  return sum / B;
}

LossValue loss_impl(const ValueNet& net, const std::vector<SamplePoint>& interior,
                    const std::vector<SamplePoint>& terminal, double lambda, const Problem& p,
                    Eigen::VectorXd* grad) {
  require(!interior.empty() || lambda == 0.0, "loss_total: empty interior sample set");
  require(!terminal.empty(), "loss_total: empty terminal sample set");
  const SineNetwork& nn = net.net;
  const int n = nn.input_dim();
  LossValue out;

  const double tf = p.horizon();
  const auto tape_b = nn.forward(batch_inputs(terminal, n, &tf), false);
  Eigen::VectorXd vadj(tape_b.batch);
  const auto BT = static_cast<double>(terminal.size());
  double sum_b = 0.0;
  for (std::size_t b = 0; b < terminal.size(); ++b) {
    const double e = tape_b.out.value[static_cast<Eigen::Index>(b)] - terminal_target(terminal[b], p);
    sum_b += std::abs(e);
    vadj[static_cast<Eigen::Index>(b)] = sgn(e) / BT;
  }
  out.terminal = sum_b / BT;
  if (grad) nn.backward(tape_b, vadj, Eigen::MatrixXd(), *grad);

  if (!interior.empty() && lambda > 0.0) {
    const auto tape_d = nn.forward(batch_inputs(interior, n, nullptr), true);
    Eigen::MatrixXd gadj;
    if (grad) gadj.resize(n, tape_d.batch);
    out.differential = residual_pass(tape_d.out, interior, p, lambda, grad ? &gadj : nullptr);
    if (grad) nn.backward(tape_d, Eigen::VectorXd::Zero(tape_d.batch), gadj, *grad);
  } else if (!interior.empty()) {
    out.differential = mean_abs_residual(net, interior, p);
  }
  out.total = out.terminal + lambda * out.differential;
  return out;
}

}  // namespace

LossValue loss_total(const ValueNet& net, const std::vector<SamplePoint>& interior,
                     const std::vector<SamplePoint>& terminal, double lambda,
                     const Problem& p) {
  require(!interior.empty(), "loss_total: empty interior sample set");
  return loss_impl(net, interior, terminal, lambda, p, nullptr);
}

LossValue loss_and_gradient(const ValueNet& net, const std::vector<SamplePoint>& interior,
                            const std::vector<SamplePoint>& terminal, double lambda,
                            const Problem& p, Eigen::VectorXd& grad) {
  grad = Eigen::VectorXd::Zero(net.net.parameters().size());
  return loss_impl(net, interior, terminal, lambda, p, &grad);
}

double mean_abs_residual(const ValueNet& net, const std::vector<SamplePoint>& pts,
                         const Problem& p) {
  require(!pts.empty(), "mean_abs_residual: empty sample set");
  const auto out = net.net.eval_batch(batch_inputs(pts, net.net.input_dim(), nullptr), true);
  return residual_pass(out, pts, p, 1.0, nullptr);
}

double terminal_mae(const ValueNet& net, const std::vector<SamplePoint>& pts,
                    const Problem& p) {
  require(!pts.empty(), "terminal_mae: empty sample set");
  const double tf = p.horizon();
  const auto out = net.net.eval_batch(batch_inputs(pts, net.net.input_dim(), &tf), false);
  double sum = 0.0;
  for (std::size_t b = 0; b < pts.size(); ++b) {
    sum += std::abs(out.value[static_cast<Eigen::Index>(b)] - terminal_target(pts[b], p));
  }
  return sum / static_cast<double>(pts.size());
}

// -- training ----------------------------------------------------------------

void TrainConfig::validate() const {
  require(lambda >= 0.0, "TrainConfig: lambda must be nonnegative");
  require(batch_interior >= 1 && batch_terminal >= 1, "TrainConfig: batch sizes must be positive");
  require(iterations >= 1, "TrainConfig: iterations must be positive");
  require(curriculum_fraction >= 0.0 && curriculum_fraction < 1.0,
          "TrainConfig: curriculum_fraction must lie in [0, 1)");
  require(expansion_fraction > 0.0 && expansion_fraction <= 1.0,
          "TrainConfig: expansion_fraction must lie in (0, 1]");
  require(learning_rate > 0.0 && final_learning_rate > 0.0,
          "TrainConfig: learning rates must be positive");
  require(log_every >= 1, "TrainConfig: log_every must be positive");
}

double TrainConfig::earliest_time(int iteration, double t0, double tf) const {
  const double warm = curriculum_fraction * iterations;
  if (iteration < warm) return tf;
  const double sweep = expansion_fraction * (iterations - warm);
  const double progress = std::min(1.0, (iteration - warm + 1.0) / std::max(1.0, sweep));
  return tf - progress * (tf - t0);
}

double TrainConfig::learning_rate_at(int iteration) const {
  const double frac = static_cast<double>(iteration) / std::max(1, iterations - 1);
  return final_learning_rate +
         0.5 * (learning_rate - final_learning_rate) * (1.0 + std::cos(std::numbers::pi * frac));
}

namespace {

std::vector<SamplePoint> draw(const Problem& p, const SampleBox& box, std::size_t count,
                              double t_lo, double t_hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t nz = p.active_modes().size();
  std::vector<SamplePoint> pts(count);
  for (auto& s : pts) {
    s.x.x1 = box.x1.lo + box.x1.width() * unit(rng);
    s.x.x2 = box.x2.lo + box.x2.width() * unit(rng);
    s.z.resize(nz);
    for (double& z : s.z) z = box.z.lo + box.z.width() * unit(rng);
    s.t = t_lo + (t_hi - t_lo) * unit(rng);
  }
  return pts;
}

}  // namespace

std::vector<SamplePoint> sample_points(const Problem& p, const SampleBox& box, std::size_t count,
                                       double t_lo, double t_hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return draw(p, box, count, t_lo, t_hi, rng);
}

TrainResult train(const TrainConfig& cfg, const Problem& p, TrainProgress progress) {
  cfg.validate();
  const double t0 = 0.0;
  const double tf = p.horizon();

  TrainResult result;
  result.net = make_value_net(p, cfg.box, cfg.hidden, cfg.omega, cfg.seed);
  SineNetwork& nn = result.net.net;

  // Fixed evaluation sample, independent of the training stream.
  const auto eval_pts = sample_points(p, cfg.box, 10000, t0, tf, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  result.initial_residual = mean_abs_residual(result.net, eval_pts, p);

  std::mt19937_64 rng(cfg.seed + 1);
  const Eigen::Index np = nn.parameters().size();
  Eigen::VectorXd grad(np), m1 = Eigen::VectorXd::Zero(np), m2 = Eigen::VectorXd::Zero(np);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double b1t = 1.0, b2t = 1.0;

  const int warm = static_cast<int>(cfg.curriculum_fraction * cfg.iterations);
  for (int it = 0; it < cfg.iterations; ++it) {
    const double t_lo = cfg.earliest_time(it, t0, tf);
    const bool pde = it >= warm;
    const auto terminal = draw(p, cfg.box, static_cast<std::size_t>(cfg.batch_terminal), tf, tf, rng);
    std::vector<SamplePoint> interior;
    if (pde) interior = draw(p, cfg.box, static_cast<std::size_t>(cfg.batch_interior), t_lo, tf, rng);

    const LossValue loss = loss_and_gradient(result.net, interior, terminal,
                                             pde ? cfg.lambda : 0.0, p, grad);
    if (!std::isfinite(loss.total) || !grad.allFinite()) {
      std::ostringstream os;
      os << "train: non-finite loss at iteration " << it << " (l=" << loss.total
         << ", l_B=" << loss.terminal << ", l_D=" << loss.differential << ", t_lo=" << t_lo
         << ", lr=" << cfg.learning_rate_at(it) << ")";
      throw Divergence(os.str());
    }

    if (it % cfg.log_every == 0 || it + 1 == cfg.iterations) {
      LossRecord rec{it, loss.total, loss.terminal, loss.differential, t_lo};
      result.history.push_back(rec);
      if (progress) progress(rec);
    }

    b1t *= beta1;
    b2t *= beta2;
    const double lr = cfg.learning_rate_at(it);
    m1 = beta1 * m1 + (1.0 - beta1) * grad;
    m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseAbs2();
    nn.mutable_parameters().array() -=
        lr * (m1.array() / (1.0 - b1t)) / ((m2.array() / (1.0 - b2t)).sqrt() + eps);
  }

  result.final_residual = mean_abs_residual(result.net, eval_pts, p);
  result.final_terminal_mae = terminal_mae(result.net, eval_pts, p);
  double lo = 1e300, hi = -1e300;
  for (const auto& s : eval_pts) {
    const double v = terminal_target(s, p);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  result.terminal_range = hi - lo;
  result.thresholds_met =
      result.final_terminal_mae <= cfg.max_terminal_mae_fraction * result.terminal_range &&
      result.final_residual * cfg.min_residual_reduction <= result.initial_residual;
  return result;
}

void write_loss_history_csv(const std::vector<LossRecord>& history, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os << "iteration,loss,loss_terminal,loss_differential,t_lo\n";
  os << std::setprecision(10);
  for (const auto& r : history) {
    os << r.iteration << "," << r.total << "," << r.terminal << "," << r.differential << ","
       << r.t_lo << "\n";
  }
}

}  // namespace ergo
