#pragma once

// JSON dataset description read by `stda synth`:
//
// {
//   "seed": 1,
//   "height": 64, "width": 64, "frames": 8,
//   "subframes": 8, "blur_window": 7, "supersample": 4,
//   "sequences": [
//     {"name": "seq000", "split": "train", "random_shapes": 3, "max_speed": 3.0},
//     {"name": "seq001", "camera": [1, 0],
//      "shapes": [{"kind": "disc", "size": 14, "center": [20, 30],
//                  "velocity": [2, 0], "color": [0.9, 0.2, 0.1]}]}
//   ]
// }
//
// Top-level scene fields act as defaults for every sequence.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stda/synth.hpp"

namespace stda::tools {

struct SequenceSpec {
  std::string name;
  std::string split = "train";
  uint64_t seed = 0;
  SceneSpec scene;
};

std::vector<SequenceSpec> parse_scene_file(const std::string& json_text);
std::vector<SequenceSpec> load_scene_file(const std::filesystem::path& path);

}  // namespace stda::tools
