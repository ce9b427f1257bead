#include "stda/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "stda/config.hpp"

namespace stda {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'D', 'A', 'C', 'K', 'P', '1'};
constexpr uint32_t kVersion = 1;

template <typename I>
void put(std::ostream& o, I v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void put_string(std::ostream& o, const std::string& s) {
  put<uint32_t>(o, static_cast<uint32_t>(s.size()));
  o.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename I>
I get(std::istream& in, const std::string& what) {
  I v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) throw std::runtime_error("truncated checkpoint: " + what);
  return v;
}

std::string get_string(std::istream& in, const std::string& what) {
  const auto n = get<uint32_t>(in, what);
  if (n > (1u << 20)) throw std::runtime_error("corrupt checkpoint: " + what);
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw std::runtime_error("truncated checkpoint: " + what);
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const DeblurModel<float>& model, uint64_t step) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
    if (!o) throw std::runtime_error("cannot write checkpoint " + path.string());
    o.write(kMagic, sizeof(kMagic));
    put<uint32_t>(o, kVersion);
    put_string(o, network_text(model.config()));
    put<uint64_t>(o, step);
    const auto& entries = model.params().entries();
    put<uint32_t>(o, static_cast<uint32_t>(entries.size()));
    for (const auto& [name, t] : entries) {
      put_string(o, name);
      put<uint32_t>(o, static_cast<uint32_t>(t.ndim()));
      for (int64_t d : t.shape()) put<uint64_t>(o, static_cast<uint64_t>(d));
      auto data = t.data();
      o.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
    }
    if (!o) throw std::runtime_error("cannot write checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("not a checkpoint: " + path.string());
  }
  if (get<uint32_t>(in, "version") != kVersion) throw std::runtime_error("unsupported checkpoint version");
  Checkpoint c;
  c.network = parse_network_text(get_string(in, "config"));
  c.step = get<uint64_t>(in, "step");
  const auto count = get<uint32_t>(in, "count");
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = get_string(in, "name");
    const auto ndim = get<uint32_t>(in, "ndim");
    if (ndim > 8) throw std::runtime_error("corrupt checkpoint: tensor rank");
    Shape shape;
    for (uint32_t d = 0; d < ndim; ++d) shape.push_back(static_cast<int64_t>(get<uint64_t>(in, "dims")));
    std::vector<float> data(static_cast<size_t>(shape_numel(shape)));
    if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)))) {
      throw std::runtime_error("truncated checkpoint: tensor " + name);
    }
    c.tensors.emplace_back(std::move(name), Tensor<float>::from_data(std::move(shape), std::move(data)));
  }
  return c;
}

void apply_checkpoint(const Checkpoint& ckpt, DeblurModel<float>& model) {
  if (!(ckpt.network == model.config())) {
    throw std::invalid_argument("checkpoint config does not match the model:\n" + network_text(ckpt.network) +
                                "vs\n" + network_text(model.config()));
  }
  auto& entries = model.params().entries();
  if (entries.size() != ckpt.tensors.size()) throw std::invalid_argument("checkpoint tensor count mismatch");
  for (size_t i = 0; i < entries.size(); ++i) {
    auto& [name, t] = entries[i];
    const auto& [cname, ct] = ckpt.tensors[i];
    if (name != cname || t.shape() != ct.shape()) {
      throw std::invalid_argument("checkpoint tensor " + cname + " does not match parameter " + name);
    }
    auto dst = t.mutable_data();
    auto src = ct.data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

DeblurModel<float> load_model(const std::filesystem::path& path, const NetworkConfig* expected) {
  const Checkpoint c = read_checkpoint(path);
  if (expected && !(*expected == c.network)) {
    throw std::invalid_argument("checkpoint " + path.string() + " was trained with a different network config");
  }
  DeblurModel<float> model(c.network, 0);
  apply_checkpoint(c, model);
  return model;
}

}  // namespace stda
