#include "ergo/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "ergo/error.hpp"

namespace ergo {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'E', 'R', 'G', 'O', 'V', 'N', 'E', 'T'};

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::string& out, T value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw CorruptFile("checkpoint: truncated file");
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

json box_json(const SampleBox& b) {
  return json{{"x1", {b.x1.lo, b.x1.hi}}, {"x2", {b.x2.lo, b.x2.hi}}, {"z", {b.z.lo, b.z.hi}}};
}

Interval interval_from(const json& j) { return Interval{j.at(0).get<double>(), j.at(1).get<double>()}; }

json metadata_json(const ValueNet& v) {
  const NetArchitecture& a = v.net.architecture();
  const NetMetadata& m = v.meta;
  return json{
      {"architecture",
       {{"input_dim", a.input_dim},
        {"hidden", a.hidden},
        {"omega", a.omega},
        {"input_offset", a.input_offset},
        {"input_scale", a.input_scale},
        {"output_scale", a.output_scale},
        {"output_offset", a.output_offset}}},
      {"problem",
       {{"modes_per_axis", m.modes_per_axis},
        {"lengths", m.lengths},
        {"info", m.info},
        {"phi_k", m.phi_k},
        {"u_max", m.u_max},
        {"d_max", m.d_max},
        {"cost",
         {{"q", m.cost.q},
          {"R", m.cost.R},
          {"barrier_weight", m.cost.barrier_weight},
          {"barrier_margin", m.cost.barrier_margin},
          {"horizon", m.cost.horizon_duration}}},
        {"t0", m.t0},
        {"tf", m.tf}}},
      {"sample_box", box_json(m.box)},
      {"seed", m.seed},
      {"fingerprint", m.fingerprint()},
  };
}

}  // namespace

std::string encode_checkpoint(const ValueNet& net) {
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  const std::string meta = metadata_json(net).dump();
  put_le<std::uint64_t>(out, meta.size());
  out += meta;
  const Eigen::VectorXd& params = net.net.parameters();
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(params.size()));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(params[i]));
  }
  put_le<std::uint64_t>(out, fnv1a(out.data(), out.size()));
  return out;
}

ValueNet decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + 4 + 8 + 8 + 8 ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CorruptFile("checkpoint: bad magic");
  }
  const std::size_t body = bytes.size() - 8;
  std::size_t tail = body;
  if (get_le<std::uint64_t>(bytes, tail) != fnv1a(bytes.data(), body)) {
    throw CorruptFile("checkpoint: checksum mismatch");
  }

  std::size_t pos = sizeof(kMagic);
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) {
    throw CorruptFile("checkpoint: unsupported format version " + std::to_string(version));
  }
  const auto meta_len = get_le<std::uint64_t>(bytes, pos);
  if (meta_len > body - pos) throw CorruptFile("checkpoint: truncated metadata");
  json meta;
  try {
    meta = json::parse(bytes.substr(pos, meta_len));
  } catch (const json::exception& e) {
    throw CorruptFile(std::string("checkpoint: metadata is not valid JSON: ") + e.what());
  }
  pos += meta_len;
  const auto count = get_le<std::uint64_t>(bytes, pos);
  if (count > (body - pos) / 8 || pos + count * 8 != body) {
    throw CorruptFile("checkpoint: parameter block has wrong length");
  }
  Eigen::VectorXd params(static_cast<Eigen::Index>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    params[static_cast<Eigen::Index>(i)] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
  }

  try {
    const json& a = meta.at("architecture");
    NetArchitecture arch;
    arch.input_dim = a.at("input_dim").get<int>();
    arch.hidden = a.at("hidden").get<std::vector<int>>();
    arch.omega = a.at("omega").get<double>();
    arch.input_offset = a.at("input_offset").get<std::vector<double>>();
    arch.input_scale = a.at("input_scale").get<std::vector<double>>();
    arch.output_scale = a.at("output_scale").get<double>();
    arch.output_offset = a.at("output_offset").get<double>();

    const json& pj = meta.at("problem");
    NetMetadata m;
    m.modes_per_axis = pj.at("modes_per_axis").get<int>();
    m.lengths = pj.at("lengths").get<std::vector<double>>();
    m.info = pj.at("info").get<std::string>();
    m.phi_k = pj.at("phi_k").get<std::vector<double>>();
    m.u_max = pj.at("u_max").get<double>();
    m.d_max = pj.at("d_max").get<double>();
    const json& c = pj.at("cost");
    m.cost.q = c.at("q").get<double>();
    m.cost.R = c.at("R").get<double>();
    m.cost.barrier_weight = c.at("barrier_weight").get<double>();
    m.cost.barrier_margin = c.at("barrier_margin").get<double>();
    m.cost.horizon_duration = c.at("horizon").get<double>();
    m.t0 = pj.at("t0").get<double>();
    m.tf = pj.at("tf").get<double>();
    const json& b = meta.at("sample_box");
    m.box.x1 = interval_from(b.at("x1"));
    m.box.x2 = interval_from(b.at("x2"));
    m.box.z = interval_from(b.at("z"));
    m.seed = meta.at("seed").get<std::uint64_t>();
    if (meta.at("fingerprint").get<std::string>() != m.fingerprint()) {
      throw CorruptFile("checkpoint: stored fingerprint disagrees with metadata");
    }
    return ValueNet{SineNetwork(std::move(arch), std::move(params)), std::move(m)};
  } catch (const json::exception& e) {
    throw CorruptFile(std::string("checkpoint: malformed metadata: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw CorruptFile(std::string("checkpoint: inconsistent network: ") + e.what());
  }
}

void save_checkpoint(const ValueNet& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  const std::string bytes = encode_checkpoint(net);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("failed writing " + path);
}

ValueNet load_checkpoint(const std::string& path, const Problem* expected) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  ValueNet net = decode_checkpoint(bytes);
  if (expected) net.check_compatible(*expected);
  return net;
}

}  // namespace ergo
