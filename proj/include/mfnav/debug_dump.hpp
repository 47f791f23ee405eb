#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "planner.hpp"
#include "semantic_map.hpp"

namespace mfnav {

/// Binary PGM (P5) of one map channel cropped to `r`, values scaled to 0..255.
inline void write_channel_pgm(const SemanticMap& map, int channel, Rect r, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << r.width() << ' ' << r.height() << "\n255\n";
  for (int y = r.y0; y <= r.y1; ++y)
    for (int x = r.x0; x <= r.x1; ++x) {
      const float v = std::clamp(map.channel(channel, {x, y}), 0.0f, 1.0f);
      out.put(char(static_cast<unsigned char>(std::lround(v * 255.0f))));
    }
}

inline std::string channel_label(const SemanticMap& map, int ch) {
  switch (ch) {
    case SemanticMap::kObstacle: return "obstacle";
    case SemanticMap::kExplored: return "explored";
    case SemanticMap::kPosition: return "position";
    case SemanticMap::kHistory: return "history";
    default: break;
  }
  if (ch == map.stair_channel()) return "stair";
  return "category_" + std::to_string(ch - SemanticMap::kFirstCategory);
}

/// Writes every channel as `<tag>_<channel>.pgm` plus `<tag>.json` describing
/// the crop and the map-to-world anchor. Returns the manifest.
inline nlohmann::json dump_map(const SemanticMap& map, const std::string& dir, const std::string& tag) {
  std::filesystem::create_directories(dir);
  Rect r = map.explored_bounds();
  r.expand_to(map.agent_cell());
  r = r.clipped(map.width(), map.height());
  nlohmann::json manifest = {{"tag", tag},
                             {"crop", {r.x0, r.y0, r.width(), r.height()}},
                             {"map_center", {map.center().x, map.center().y}},
                             {"world_anchor", {map.anchor().x, map.anchor().y}},
                             {"agent_cell", {map.agent_cell().x, map.agent_cell().y}},
                             {"channels", nlohmann::json::array()}};
  for (int ch = 0; ch < map.channel_count(); ++ch) {
    const std::string name = tag + "_" + channel_label(map, ch) + ".pgm";
    write_channel_pgm(map, ch, r, (std::filesystem::path(dir) / name).string());
    manifest["channels"].push_back({{"index", ch}, {"name", channel_label(map, ch)}, {"file", name}});
  }
  std::ofstream out(std::filesystem::path(dir) / (tag + ".json"));
  out << manifest.dump(2) << '\n';
  return manifest;
}

}  // namespace mfnav
