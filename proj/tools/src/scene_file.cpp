#include "scene_file.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace stda::tools {

using nlohmann::json;

namespace {

std::array<double, 2> pair_of(const json& j, const char* key) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument(std::string(key) + " must be a 2-element array");
  return {j[0].get<double>(), j[1].get<double>()};
}

constexpr std::initializer_list<const char*> kSceneKeys = {
    "height", "width", "frames", "subframes", "blur_window", "supersample",
    "textured_background", "background", "camera"};

void check_keys(const json& j, const char* where, std::initializer_list<std::initializer_list<const char*>> groups) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const auto& g : groups) {
      for (const char* k : g) known = known || key == k;
    }
    if (!known) throw std::invalid_argument(std::string("unknown ") + where + " key \"" + key + "\"");
  }
}

void read_scene_fields(const json& j, SceneSpec& s) {
  s.height = j.value("height", s.height);
  s.width = j.value("width", s.width);
  s.frames = j.value("frames", s.frames);
  s.subframes = j.value("subframes", s.subframes);
  s.blur_window = j.value("blur_window", s.blur_window);
  s.supersample = j.value("supersample", s.supersample);
  s.textured_background = j.value("textured_background", s.textured_background);
  s.background = j.value("background", s.background);
  if (j.contains("camera")) s.camera = pair_of(j["camera"], "camera");
}

ShapeSpec read_shape(const json& j) {
  check_keys(j, "shape", {{"kind", "size", "center", "velocity", "color", "texture_amplitude", "texture_period"}});
  ShapeSpec s;
  const std::string kind = j.value("kind", std::string("square"));
  if (kind == "square") s.kind = ShapeSpec::Kind::square;
  else if (kind == "disc") s.kind = ShapeSpec::Kind::disc;
  else throw std::invalid_argument("unknown shape kind: " + kind);
  s.size = j.value("size", s.size);
  if (j.contains("center")) s.center = pair_of(j["center"], "center");
  if (j.contains("velocity")) s.velocity = pair_of(j["velocity"], "velocity");
  if (j.contains("color")) {
    const auto& c = j["color"];
    if (!c.is_array() || c.size() != 3) throw std::invalid_argument("color must be a 3-element array");
    s.color = {c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
  }
  s.texture_amplitude = j.value("texture_amplitude", s.texture_amplitude);
  s.texture_period = j.value("texture_period", s.texture_period);
  return s;
}

}  // namespace

std::vector<SequenceSpec> parse_scene_file(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scene file is not valid JSON: ") + e.what());
  }
  try {
    check_keys(root, "scene", {kSceneKeys, {"seed", "sequences"}});
    SceneSpec defaults;
    read_scene_fields(root, defaults);
    const uint64_t seed = root.value("seed", uint64_t{0});
    if (!root.contains("sequences") || !root["sequences"].is_array() || root["sequences"].empty()) {
      throw std::invalid_argument("scene file needs a non-empty \"sequences\" array");
    }
    std::vector<SequenceSpec> out;
    uint64_t index = 0;
    for (const auto& j : root["sequences"]) {
      check_keys(j, "sequence", {kSceneKeys, {"name", "split", "seed", "random_shapes", "max_speed", "shapes"}});
      SequenceSpec q;
      char name[32];
      std::snprintf(name, sizeof(name), "seq%03llu", static_cast<unsigned long long>(index));
      q.name = j.value("name", std::string(name));
      q.split = j.value("split", q.split);
      q.seed = j.value("seed", seed + index);
      if (j.contains("random_shapes")) {
        q.scene = random_scene(j.value("height", defaults.height), j.value("width", defaults.width),
                               j.value("frames", defaults.frames), j["random_shapes"].get<int>(),
                               j.value("max_speed", 3.0), q.seed);
        const auto camera = q.scene.camera;
        const auto shapes = q.scene.shapes;
        q.scene = defaults;
        q.scene.camera = camera;
        q.scene.shapes = shapes;
      } else {
        q.scene = defaults;
      }
      read_scene_fields(j, q.scene);
      if (j.contains("shapes")) {
        for (const auto& s : j["shapes"]) q.scene.shapes.push_back(read_shape(s));
      }
      q.scene.validate();
      out.push_back(std::move(q));
      ++index;
    }
    return out;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad scene file field: ") + e.what());
  }
}

std::vector<SequenceSpec> load_scene_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read scene file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene_file(ss.str());
}

}  // namespace stda::tools
