#include <doctest.h>

#include <cmath>
#include <random>

#include "ergo/error.hpp"
#include "ergo/value_net.hpp"

using namespace ergo;

namespace {

NetArchitecture small_arch(int input_dim = 4) {
  NetArchitecture a;
  a.input_dim = input_dim;
  a.hidden = {16, 16};
  a.omega = 3.0;
  a.input_offset.assign(input_dim, 0.25);
  a.input_scale.assign(input_dim, 2.0);
  a.output_scale = 0.7;
  a.output_offset = 0.1;
  return a;
}

Eigen::VectorXd random_input(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = u(rng);
  return x;
}

}  // namespace

TEST_CASE("parameter count") {
  NetArchitecture a = small_arch(4);
  CHECK(a.parameter_count() == (16 * 4 + 16) + (16 * 16 + 16) + (16 + 1));
  const SineNetwork net(a, 1);
  CHECK(static_cast<std::size_t>(net.parameters().size()) == a.parameter_count());
}

TEST_CASE("input gradients match central differences") {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SineNetwork net(small_arch(), seed);
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::VectorXd x = random_input(rng, 4);
      Eigen::VectorXd g;
      net.eval(x, &g);
      for (int j = 0; j < 4; ++j) {
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += 1e-4;
        xm[j] -= 1e-4;
        const double fd = (net.eval(xp) - net.eval(xm)) / 2e-4;
        CHECK(std::abs(g[j] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("zero output layer gives a constant") {
  const NetArchitecture a = small_arch();
  SineNetwork net(a, 5);
  Eigen::VectorXd& w = net.mutable_parameters();
  w.tail(17).setZero();
  w[w.size() - 1] = 0.3;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd g;
    CHECK(net.eval(random_input(rng, 4), &g) == doctest::Approx(0.7 * 0.3 + 0.1));
    CHECK(g.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("relabeling inputs together with first-layer columns leaves the output unchanged") {
  NetArchitecture a = small_arch();
  const SineNetwork net(a, 9);
  // Swap inputs 2 and 3: the first-layer weight matrix is column-major, 16 x 4.
  Eigen::VectorXd p = net.parameters();
  for (int r = 0; r < 16; ++r) std::swap(p[2 * 16 + r], p[3 * 16 + r]);
  const SineNetwork swapped(a, p);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd x = random_input(rng, 4);
    Eigen::VectorXd y = x;
    std::swap(y[2], y[3]);
    CHECK(swapped.eval(y) == doctest::Approx(net.eval(x)).epsilon(1e-14));
  }
}

TEST_CASE("batch evaluation agrees with single points") {
  const SineNetwork net(small_arch(), 4);
  std::mt19937_64 rng(8);
  Eigen::MatrixXd in(4, 7);
  for (int b = 0; b < 7; ++b) in.col(b) = random_input(rng, 4);
  const NetBatchOutput out = net.eval_batch(in, true);
  for (int b = 0; b < 7; ++b) {
    Eigen::VectorXd g;
    CHECK(out.value[b] == doctest::Approx(net.eval(in.col(b), &g)).epsilon(1e-13));
    CHECK((out.grad.col(b) - g).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("parameter gradients of V and of dV/dinput match central differences") {
  const SineNetwork net(small_arch(3), 11);
  std::mt19937_64 rng(12);
  Eigen::MatrixXd in(3, 4);
  for (int b = 0; b < 4; ++b) in.col(b) = random_input(rng, 3);
  Eigen::VectorXd vadj(4);
  Eigen::MatrixXd gadj(3, 4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int b = 0; b < 4; ++b) {
    vadj[b] = n(rng);
    for (int j = 0; j < 3; ++j) gadj(j, b) = n(rng);
  }
  auto objective = [&](const SineNetwork& s) {
    const NetBatchOutput o = s.eval_batch(in, true);
    return vadj.dot(o.value) + (gadj.array() * o.grad.array()).sum();
  };

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.parameters().size());
  net.backward(net.forward(in, true), vadj, gadj, grad);

  const NetArchitecture a = net.architecture();
  for (Eigen::Index i = 0; i < grad.size(); i += 7) {
    Eigen::VectorXd pp = net.parameters(), pm = net.parameters();
    pp[i] += 1e-6;
    pm[i] -= 1e-6;
    const double fd = (objective(SineNetwork(a, pp)) - objective(SineNetwork(a, pm))) / 2e-6;
    CHECK(std::abs(grad[i] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("shape errors") {
  const SineNetwork net(small_arch(), 0);
  CHECK_THROWS_AS(net.eval(Eigen::VectorXd::Zero(3)), InvalidArgument);
  CHECK_THROWS_AS(SineNetwork(small_arch(), Eigen::VectorXd::Zero(5)), InvalidArgument);
  NetArchitecture bad = small_arch();
  bad.hidden.clear();
  CHECK_THROWS_AS(SineNetwork(bad, 0), InvalidArgument);
}

TEST_CASE("initialization is deterministic in the seed") {
  CHECK(SineNetwork(small_arch(), 42).parameters() == SineNetwork(small_arch(), 42).parameters());
  CHECK(SineNetwork(small_arch(), 42).parameters() != SineNetwork(small_arch(), 43).parameters());
}
