#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "simgroup/blockmerge.hpp"
#include "simgroup/datagen.hpp"
#include "simgroup/grouping.hpp"
#include "simgroup/losses.hpp"
#include "simgroup/model.hpp"
#include "simgroup/trainer.hpp"

namespace simgroup {

// Every tunable of a run. Text form is `section.key=value`, one per line;
// `seed` has no section.
struct RunConfig {
  std::uint64_t seed = 0;
  ModelConfig model;
  LossConfig loss;
  TrainConfig train;
  GroupingConfig grouping;
  SceneConfig scene;
  SceneSpec data;
  std::size_t data_scenes = 200;
  DbscanParams dbscan;

  void validate() const;

  // Applies one `key=value` assignment. Throws ConfigError naming the key
  // when it is unknown or the value does not parse.
  void set(std::string_view key, std::string_view value, std::string_view source = "--set");
  // Resolved config with every key, in a fixed order.
  std::string to_text() const;
  static RunConfig from_text(std::string_view text, std::string_view source);

  static const std::vector<std::string>& keys();
  // One-line description of a key including its default.
  static std::string describe(std::string_view key);

  friend bool operator==(const RunConfig& a, const RunConfig& b) { return a.to_text() == b.to_text(); }
};

}  // namespace simgroup
