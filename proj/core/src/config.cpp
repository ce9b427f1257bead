#include "stda/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stda {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename I>
I to_int(const std::string& key, const std::string& v) {
  I out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw std::invalid_argument(key + ": not an integer: " + v);
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t n = 0;
    const double d = std::stod(v, &n);
    if (n != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument(key + ": not a number: " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw std::invalid_argument(key + ": not a boolean: " + v);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool set_network(NetworkConfig& n, const std::string& key, const std::string& v) {
  if (key == "channels") n.channels = to_int<int>(key, v);
  else if (key == "heads") n.heads = to_int<int>(key, v);
  else if (key == "points") n.points = to_int<int>(key, v);
  else if (key == "frames") n.frames = to_int<int>(key, v);
  else if (key == "residual_blocks") n.residual_blocks = to_int<int>(key, v);
  else if (key == "leaky_slope") n.leaky_slope = to_double(key, v);
  else if (key == "use_flow") n.use_flow = to_bool(key, v);
  else if (key == "stack") n.stack = to_bool(key, v);
  else if (key == "stack_shared_weights") n.stack_shared_weights = to_bool(key, v);
  else return false;
  return true;
}

template <typename F>
void for_each_line(const std::string& text, F&& f) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key = value");
    f(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

}  // namespace

std::string network_text(const NetworkConfig& n) {
  std::ostringstream o;
  o << "channels = " << n.channels << "\n"
    << "heads = " << n.heads << "\n"
    << "points = " << n.points << "\n"
    << "frames = " << n.frames << "\n"
    << "residual_blocks = " << n.residual_blocks << "\n"
    << "leaky_slope = " << fmt(n.leaky_slope) << "\n"
    << "use_flow = " << (n.use_flow ? "true" : "false") << "\n"
    << "stack = " << (n.stack ? "true" : "false") << "\n"
    << "stack_shared_weights = " << (n.stack_shared_weights ? "true" : "false") << "\n";
  return o.str();
}

NetworkConfig parse_network_text(const std::string& text) {
  NetworkConfig n;
  for_each_line(text, [&](const std::string& k, const std::string& v) {
    if (!set_network(n, k, v)) throw std::invalid_argument("unknown network key: " + k);
  });
  n.validate();
  return n;
}

void RunConfig::set(const std::string& key, const std::string& v) {
  if (set_network(network, key, v)) return;
  if (key == "gamma") loss.gamma = to_double(key, v);
  else if (key == "learning_rate") optimizer.learning_rate = to_double(key, v);
  else if (key == "beta1") optimizer.beta1 = to_double(key, v);
  else if (key == "beta2") optimizer.beta2 = to_double(key, v);
  else if (key == "epsilon") optimizer.epsilon = to_double(key, v);
  else if (key == "batch_size") batch_size = to_int<int>(key, v);
  else if (key == "crop_size") crop_size = to_int<int64_t>(key, v);
  else if (key == "iterations") iterations = to_int<int64_t>(key, v);
  else if (key == "seed") seed = to_int<uint64_t>(key, v);
  else if (key == "dataset_root") dataset_root = v;
  else if (key == "split") split = v;
  else if (key == "checkpoint_dir") checkpoint_dir = v;
  else if (key == "checkpoint_every") checkpoint_every = to_int<int64_t>(key, v);
  else if (key == "log_file") log_file = v;
  else if (key == "augment") augment = to_bool(key, v);
  else if (key == "warp_border") warp_border = to_int<int>(key, v);
  else throw std::invalid_argument("unknown config key: " + key);
}

void RunConfig::validate() const {
  network.validate();
  loss.validate();
  if (!(optimizer.learning_rate > 0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(optimizer.beta1 > 0 && optimizer.beta1 < 1)) throw std::invalid_argument("beta1 must lie in (0,1)");
  if (!(optimizer.beta2 > 0 && optimizer.beta2 < 1)) throw std::invalid_argument("beta2 must lie in (0,1)");
  if (!(optimizer.epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (crop_size < 4 || crop_size % 4 != 0) throw std::invalid_argument("crop_size must be a positive multiple of 4");
  if (iterations < 1) throw std::invalid_argument("iterations must be positive");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be non-negative");
  if (warp_border < 0) throw std::invalid_argument("warp_border must be non-negative");
}

std::string RunConfig::to_text() const {
  std::ostringstream o;
  o << network_text(network) << "gamma = " << fmt(loss.gamma) << "\n"
    << "learning_rate = " << fmt(optimizer.learning_rate) << "\n"
    << "beta1 = " << fmt(optimizer.beta1) << "\n"
    << "beta2 = " << fmt(optimizer.beta2) << "\n"
    << "epsilon = " << fmt(optimizer.epsilon) << "\n"
    << "batch_size = " << batch_size << "\n"
    << "crop_size = " << crop_size << "\n"
    << "iterations = " << iterations << "\n"
    << "seed = " << seed << "\n"
    << "augment = " << (augment ? "true" : "false") << "\n"
    << "warp_border = " << warp_border << "\n"
    << "checkpoint_every = " << checkpoint_every << "\n";
  if (!dataset_root.empty()) o << "dataset_root = " << dataset_root << "\n";
  if (!split.empty()) o << "split = " << split << "\n";
  if (!checkpoint_dir.empty()) o << "checkpoint_dir = " << checkpoint_dir << "\n";
  if (!log_file.empty()) o << "log_file = " << log_file << "\n";
  return o.str();
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  for_each_line(text, [&](const std::string& k, const std::string& v) { cfg.set(k, v); });
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse(ss.str());
  // Relative paths resolve against the config file's directory.
  const auto base = path.parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(cfg.dataset_root);
  resolve(cfg.checkpoint_dir);
  resolve(cfg.log_file);
  return cfg;
}

}  // namespace stda
