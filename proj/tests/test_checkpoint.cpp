#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "ergo/checkpoint.hpp"
#include "ergo/error.hpp"

using namespace ergo;

namespace {

Problem make_problem(int modes) {
  const auto space = ExplorationSpace::unit(1);
  return Problem(BasisSet(space, modes), InfoDistribution::bimodal(space), ControlBounds{5.0, 2.0},
                 CostParams{});
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("ergo_test_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("save, load, save gives identical bytes") {
  const Problem p = make_problem(2);
  const ValueNet net = make_value_net(p, SampleBox{}, {16, 16}, 30.0, 7);
  const std::string a = temp_path("a.ergonet"), b = temp_path("b.ergonet");
  save_checkpoint(net, a);
  save_checkpoint(load_checkpoint(a, &p), b);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).substr(0, 8) == "ERGOVNET");
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST_CASE("loaded net evaluates identically") {
  const Problem p = make_problem(3);
  const ValueNet net = make_value_net(p, SampleBox{}, {16, 16}, 30.0, 1);
  const ValueNet back = decode_checkpoint(encode_checkpoint(net));
  CHECK(back.meta.fingerprint() == net.meta.fingerprint());
  CHECK(back.meta.seed == net.meta.seed);
  CHECK(back.net.architecture().omega == net.net.architecture().omega);
  const auto pts = sample_points(p, SampleBox{}, 100, 0.0, 1.0, 3);
  for (const auto& s : pts) {
    const ValueGradients g0 = net_eval_with_grads(net, s), g1 = net_eval_with_grads(back, s);
    CHECK(g0.value == g1.value);
    CHECK(g0.dx2 == g1.dx2);
  }
}

TEST_CASE("loading under a different problem fails") {
  const Problem p2 = make_problem(2), p3 = make_problem(3);
  const std::string path = temp_path("n.ergonet");
  save_checkpoint(make_value_net(p2, SampleBox{}, {8}, 30.0, 0), path);
  CHECK_NOTHROW(load_checkpoint(path, &p2));
  CHECK_THROWS_AS(load_checkpoint(path, &p3), FingerprintMismatch);
  std::filesystem::remove(path);
}

TEST_CASE("damaged files are rejected") {
  const Problem p = make_problem(2);
  const std::string bytes = encode_checkpoint(make_value_net(p, SampleBox{}, {8}, 30.0, 0));
  CHECK_THROWS_AS(decode_checkpoint(""), CorruptFile);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), CorruptFile);
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(decode_checkpoint(flipped), CorruptFile);
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(magic), CorruptFile);
  CHECK_THROWS_AS(load_checkpoint(temp_path("missing.ergonet")), Error);
}
