#include "stda/dataset.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "stda/image_io.hpp"
#include "stda/metrics.hpp"
#include "stda/ops.hpp"

namespace stda {

void FrameWindow::validate() const {
  if (blurry.size() != 3 && blurry.size() != 5) throw std::invalid_argument("window length must be 3 or 5");
  if (!sharp.empty() && sharp.size() != blurry.size()) throw std::invalid_argument("sharp/blurry length mismatch");
  const Shape s = blurry.front().shape();
  if (s.size() != 3 || s[0] != 3) throw ShapeError("window frames must be [3,H,W]");
  auto check = [&](const Tensor<float>& f) {
    if (f.shape() != s) throw ShapeError("window frames differ in dims");
    for (float v : f.data()) {
      if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("window values must lie in [0,1]");
    }
  };
  for (const auto& f : blurry) check(f);
  for (const auto& f : sharp) check(f);
  if (mid != static_cast<int>(blurry.size()) / 2) throw std::invalid_argument("mid index must be the window centre");
}

Tensor<float> FrameWindow::blurry_stack() const { return stack(blurry); }
Tensor<float> FrameWindow::sharp_stack() const { return stack(sharp); }

FrameWindow apply_augmentation(const FrameWindow& window, const AugmentPlan& plan) {
  FrameWindow out;
  out.mid = window.mid;
  for (const auto& f : window.blurry) out.blurry.push_back(apply_augmentation(f, plan));
  for (const auto& f : window.sharp) out.sharp.push_back(apply_augmentation(f, plan));
  return out;
}

FrameWindow augment(const FrameWindow& window, int64_t crop, uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto& f = window.blurry.front();
  return apply_augmentation(window, draw_augment_plan(f.dim(1), f.dim(2), crop, rng));
}

std::vector<int> clamped_window(int count, int centre, int length) {
  if (count < 1) throw std::invalid_argument("empty sequence");
  std::vector<int> idx;
  for (int d = -length / 2; d <= length / 2; ++d) idx.push_back(std::clamp(centre + d, 0, count - 1));
  return idx;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& root) {
  std::ifstream in(root / "manifest.txt");
  if (!in) throw std::runtime_error("dataset manifest not found under " + root.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    ManifestEntry e;
    std::string psnr_text, ssim_text;
    if (!(ss >> e.name >> e.split >> e.frames >> psnr_text >> ssim_text)) {
      throw std::runtime_error("malformed manifest line " + std::to_string(lineno));
    }
    // strtod accepts the "inf" written for identical blurry and sharp frames.
    char* end = nullptr;
    e.baseline_psnr = std::strtod(psnr_text.c_str(), &end);
    if (*end != '\0') throw std::runtime_error("malformed manifest line " + std::to_string(lineno));
    e.baseline_ssim = std::strtod(ssim_text.c_str(), &end);
    if (*end != '\0') throw std::runtime_error("malformed manifest line " + std::to_string(lineno));
    entries.push_back(e);
  }
  return entries;
}

void write_manifest(const std::filesystem::path& root, const std::vector<ManifestEntry>& entries) {
  std::filesystem::create_directories(root);
  std::ofstream out(root / "manifest.txt");
  if (!out) throw std::runtime_error("cannot write manifest under " + root.string());
  out << "# name split frames baseline_psnr baseline_ssim\n";
  char buf[64];
  for (const auto& e : entries) {
    out << e.name << ' ' << e.split << ' ' << e.frames;
    std::snprintf(buf, sizeof(buf), " %.17g %.17g\n", e.baseline_psnr, e.baseline_ssim);
    out << buf;
  }
  if (!out) throw std::runtime_error("cannot write manifest under " + root.string());
}

namespace {

std::string frame_name(size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05zu.png", i);
  return buf;
}

Tensor<float> quantized(const Tensor<float>& f) {
  std::vector<float> v(f.data().begin(), f.data().end());
  for (auto& x : v) x = quantize8(x);
  return Tensor<float>::from_data(f.shape(), std::move(v));
}

}  // namespace

ManifestEntry write_sequence(const std::filesystem::path& root, const Sequence& seq) {
  if (seq.blurry.size() != seq.sharp.size() || seq.blurry.empty()) {
    throw std::invalid_argument("sequence needs equal, non-zero blurry and sharp frame counts");
  }
  const auto dir = root / seq.name;
  std::filesystem::create_directories(dir / "blur");
  std::filesystem::create_directories(dir / "sharp");
  ManifestEntry e{seq.name, seq.split, static_cast<int>(seq.blurry.size()), 0, 0};
  for (size_t i = 0; i < seq.blurry.size(); ++i) {
    save_image(dir / "blur" / frame_name(i), seq.blurry[i]);
    save_image(dir / "sharp" / frame_name(i), seq.sharp[i]);
    const auto b = quantized(seq.blurry[i]), s = quantized(seq.sharp[i]);
    e.baseline_psnr += psnr(b, s);
    e.baseline_ssim += ssim(b, s);
  }
  e.baseline_psnr /= static_cast<double>(seq.blurry.size());
  e.baseline_ssim /= static_cast<double>(seq.blurry.size());
  return e;
}

Sequence load_sequence(const std::filesystem::path& dir) {
  Sequence seq;
  seq.name = dir.filename().string();
  for (const auto& p : list_frames(dir / "blur")) seq.blurry.push_back(load_image(p));
  for (const auto& p : list_frames(dir / "sharp")) seq.sharp.push_back(load_image(p));
  if (seq.blurry.empty()) throw std::runtime_error("no frames in " + (dir / "blur").string());
  if (seq.blurry.size() != seq.sharp.size()) {
    throw std::runtime_error("blur/sharp frame counts differ in " + dir.string());
  }
  return seq;
}

Dataset Dataset::load(const std::filesystem::path& root, const std::string& split) {
  Dataset ds;
  for (const auto& e : read_manifest(root)) {
    if (!split.empty() && e.split != split) continue;
    Sequence seq = load_sequence(root / e.name);
    seq.split = e.split;
    if (static_cast<int>(seq.blurry.size()) != e.frames) {
      throw std::runtime_error("sequence " + e.name + " frame count does not match the manifest");
    }
    ds.sequences_.push_back(std::move(seq));
    ds.entries_.push_back(e);
  }
  if (ds.sequences_.empty()) throw std::runtime_error("no sequences in split '" + split + "' under " + root.string());
  return ds;
}

FrameWindow Dataset::window(size_t sequence, int centre, int length) const {
  const auto& seq = sequences_.at(sequence);
  FrameWindow w;
  w.mid = length / 2;
  for (int i : clamped_window(static_cast<int>(seq.blurry.size()), centre, length)) {
    w.blurry.push_back(seq.blurry[static_cast<size_t>(i)]);
    w.sharp.push_back(seq.sharp[static_cast<size_t>(i)]);
  }
  return w;
}

}  // namespace stda
