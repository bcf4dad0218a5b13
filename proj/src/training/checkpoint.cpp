// SPDX-License-Identifier: Apache-2.0
#include "tea/training/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tea/error.hpp"

namespace tea::training {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  template <typename T>
  void put(T v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void bytes(const std::string& s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}
  template <typename T>
  T get() {
    T v;
    if (!in_.read(reinterpret_cast<char*>(&v), sizeof(T))) truncated();
    return to_little(v);
  }
  std::string bytes(std::size_t n) {
    if (n > (1u << 30)) truncated();
    std::string s(n, '\0');
    if (n > 0 && !in_.read(s.data(), static_cast<std::streamsize>(n))) truncated();
    return s;
  }
  [[noreturn]] void truncated() const {
    throw Incompatible("checkpoint '" + path_ + "' is truncated or corrupt (format " + kCheckpointMagic + ")");
  }

 private:
  std::istream& in_;
  std::string path_;
};

std::size_t to_size(const std::map<std::string, std::string>& c, const std::string& key, const std::string& path) {
  auto it = c.find(key);
  if (it == c.end()) throw Incompatible("checkpoint '" + path + "' lacks config key '" + key + "'");
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw Incompatible("checkpoint '" + path + "': config key '" + key + "' is not a count");
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const model::TeaModel& m,
                     std::map<std::string, std::string> config, std::size_t epoch) {
  const auto& mc = m.config();
  config["variant"] = model::to_string(mc.variant);
  config["dim"] = std::to_string(mc.dim);
  config["n_users"] = std::to_string(mc.n_users);
  config["n_items"] = std::to_string(mc.n_items);
  config["seq_len"] = std::to_string(mc.seq_len);
  std::ostringstream text;
  for (const auto& [k, v] : config) text << k << " = " << v << '\n';

  std::ofstream out(path, std::ios::binary);
  if (!out) throw MissingInput("cannot write checkpoint '" + path.string() + "'");
  Writer w(out);
  w.bytes(std::string(kCheckpointMagic) + "\n");
  const std::string cfg = text.str();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cfg.size()));
  w.bytes(cfg);
  w.put<std::uint64_t>(epoch);
  const auto& params = m.parameters();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ad::ParamId id{i};
    const auto& name = params.name(id);
    const auto& t = params.value(id);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.put<std::uint64_t>(d);
    for (double v : t.values()) w.put<double>(v);
  }
  if (!out) throw MissingInput("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput("cannot open checkpoint '" + path.string() + "'");
  Reader r(in, path.string());
  const std::string magic = std::string(kCheckpointMagic) + "\n";
  std::string head(magic.size(), '\0');
  if (!in.read(head.data(), static_cast<std::streamsize>(head.size())) || head != magic) {
    throw Incompatible("'" + path.string() + "' is not a checkpoint: expected header \"" + kCheckpointMagic + "\"");
  }
  const std::string cfg = r.bytes(r.get<std::uint32_t>());
  std::map<std::string, std::string> config;
  std::istringstream lines(cfg);
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) r.truncated();
    config[line.substr(0, eq)] = line.substr(eq + 3);
  }
  const auto epoch = static_cast<std::size_t>(r.get<std::uint64_t>());
  const auto count = r.get<std::uint32_t>();
  ad::ParameterStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.bytes(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    if (rank > 4) r.truncated();
    ad::Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
    const std::size_t n = ad::shape_size(shape);
    if (n > (std::size_t{1} << 32)) r.truncated();
    std::vector<double> values(n);
    for (auto& v : values) v = r.get<double>();
    try {
      store.add(std::move(name), ad::Tensor(shape, std::move(values)));
    } catch (const Error& e) {
      throw Incompatible("checkpoint '" + path.string() + "': " + e.what());
    }
  }
  model::ModelConfig mc;
  const std::string p = path.string();
  auto vit = config.find("variant");
  if (vit == config.end()) throw Incompatible("checkpoint '" + p + "' lacks config key 'variant'");
  try {
    mc.variant = model::parse_variant(vit->second);
  } catch (const InvalidArgument& e) {
    throw Incompatible("checkpoint '" + p + "': " + e.what());
  }
  mc.dim = to_size(config, "dim", p);
  mc.n_users = to_size(config, "n_users", p);
  mc.n_items = to_size(config, "n_items", p);
  mc.seq_len = to_size(config, "seq_len", p);
  return {std::move(config), epoch, model::TeaModel::from_parameters(mc, std::move(store))};
}

}  // namespace tea::training
