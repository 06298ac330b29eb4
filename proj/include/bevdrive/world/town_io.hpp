#pragma once

#include <string>
#include <vector>

#include "bevdrive/world/types.hpp"

namespace bevdrive::world {

// Versioned binary town format, magic "BVDT".
std::vector<uint8_t> serialize_town(const TownMap& town);
TownMap deserialize_town(const std::vector<uint8_t>& bytes);

void save_town(const TownMap& town, const std::string& path);
TownMap load_town(const std::string& path);

// Human-readable dump for debugging (gen-town --dump).
std::string dump_town_text(const TownMap& town);

}  // namespace bevdrive::world
