#include "bevdrive/world/town_io.hpp"

#include <sstream>

#include "bevdrive/serial.hpp"

namespace bevdrive::world {

namespace {
constexpr char kMagic[4] = {'B', 'V', 'D', 'T'};
constexpr uint16_t kVersion = 1;

void put_polyline(BinWriter& w, const std::vector<Vec2>& pts) {
  w.u32(static_cast<uint32_t>(pts.size()));
  for (const Vec2& p : pts) {
    w.f64(p.x);
    w.f64(p.y);
  }
}

std::vector<Vec2> get_polyline(BinReader& r) {
  const uint32_t n = r.u32();
  std::vector<Vec2> pts(n);
  for (auto& p : pts) {
    p.x = r.f64();
    p.y = r.f64();
  }
  return pts;
}
}  // namespace

std::vector<uint8_t> serialize_town(const TownMap& town) {
  BinWriter w;
  w.magic(kMagic);
  w.u16(kVersion);

  w.u32(static_cast<uint32_t>(town.lanes.size()));
  for (const LaneSegment& l : town.lanes) {
    BinWriter rec;
    rec.i32(l.id);
    rec.f64(l.width);
    rec.i32(l.junction_id);
    rec.u8(static_cast<uint8_t>(l.left_kind));
    rec.u8(static_cast<uint8_t>(l.right_kind));
    put_polyline(rec, l.centerline);
    put_polyline(rec, l.left_boundary);
    put_polyline(rec, l.right_boundary);
    rec.u32(static_cast<uint32_t>(l.successors.size()));
    for (int32_t s : l.successors) rec.i32(s);
    rec.u32(static_cast<uint32_t>(l.predecessors.size()));
    for (int32_t p : l.predecessors) rec.i32(p);
    w.u32(static_cast<uint32_t>(rec.data().size()));
    w.bytes(rec.data().data(), rec.data().size());
  }

  w.u32(static_cast<uint32_t>(town.junctions.size()));
  for (const Junction& j : town.junctions) {
    BinWriter rec;
    rec.i32(j.id);
    put_polyline(rec, j.box);
    rec.u32(static_cast<uint32_t>(j.lanes.size()));
    for (int32_t l : j.lanes) rec.i32(l);
    w.u32(static_cast<uint32_t>(rec.data().size()));
    w.bytes(rec.data().data(), rec.data().size());
  }

  w.u32(static_cast<uint32_t>(town.lights.size()));
  for (const TrafficLight& t : town.lights) {
    BinWriter rec;
    rec.i32(t.id);
    rec.f64(t.stop_zone.center.x);
    rec.f64(t.stop_zone.center.y);
    rec.f64(t.stop_zone.heading);
    rec.f64(t.stop_zone.half_extents.x);
    rec.f64(t.stop_zone.half_extents.y);
    rec.f64(t.green_s);
    rec.f64(t.yellow_s);
    rec.f64(t.red_s);
    rec.f64(t.clock);
    rec.i32(t.conflict_group);
    rec.i32(t.junction_id);
    rec.i32(t.controlled_lane);
    w.u32(static_cast<uint32_t>(rec.data().size()));
    w.bytes(rec.data().data(), rec.data().size());
  }

  w.u32(static_cast<uint32_t>(town.spawn_points.size()));
  for (const SpawnPoint& sp : town.spawn_points) {
    w.i32(sp.lane);
    w.f64(sp.s);
  }
  return w.data();
}

TownMap deserialize_town(const std::vector<uint8_t>& bytes) {
  BinReader r(bytes);
  r.expect_magic(kMagic);
  const uint16_t version = r.u16();
  if (version != kVersion) throw std::runtime_error("unsupported town format version");

  TownMap town;
  const uint32_t n_lanes = r.u32();
  town.lanes.resize(n_lanes);
  for (uint32_t i = 0; i < n_lanes; ++i) {
    r.u32();  // record length, unused on a sequential read
    LaneSegment& l = town.lanes[i];
    l.id = r.i32();
    l.width = r.f64();
    l.junction_id = r.i32();
    l.left_kind = static_cast<BoundaryKind>(r.u8());
    l.right_kind = static_cast<BoundaryKind>(r.u8());
    l.centerline = get_polyline(r);
    l.left_boundary = get_polyline(r);
    l.right_boundary = get_polyline(r);
    l.successors.resize(r.u32());
    for (auto& s : l.successors) s = r.i32();
    l.predecessors.resize(r.u32());
    for (auto& p : l.predecessors) p = r.i32();
    l.rebuild_arclength();
  }

  const uint32_t n_junctions = r.u32();
  town.junctions.resize(n_junctions);
  for (uint32_t i = 0; i < n_junctions; ++i) {
    r.u32();
    Junction& j = town.junctions[i];
    j.id = r.i32();
    j.box = get_polyline(r);
    j.lanes.resize(r.u32());
    for (auto& l : j.lanes) l = r.i32();
  }

  const uint32_t n_lights = r.u32();
  town.lights.resize(n_lights);
  for (uint32_t i = 0; i < n_lights; ++i) {
    r.u32();
    TrafficLight& t = town.lights[i];
    t.id = r.i32();
    t.stop_zone.center.x = r.f64();
    t.stop_zone.center.y = r.f64();
    t.stop_zone.heading = r.f64();
    t.stop_zone.half_extents.x = r.f64();
    t.stop_zone.half_extents.y = r.f64();
    t.green_s = r.f64();
    t.yellow_s = r.f64();
    t.red_s = r.f64();
    t.clock = r.f64();
    t.conflict_group = r.i32();
    t.junction_id = r.i32();
    t.controlled_lane = r.i32();
  }

  const uint32_t n_spawns = r.u32();
  town.spawn_points.resize(n_spawns);
  for (auto& sp : town.spawn_points) {
    sp.lane = r.i32();
    sp.s = r.f64();
  }
  town.validate();
  return town;
}

void save_town(const TownMap& town, const std::string& path) {
  BinWriter w;
  const auto bytes = serialize_town(town);
  w.bytes(bytes.data(), bytes.size());
  w.write_file(path);
}

TownMap load_town(const std::string& path) {
  BinReader r = BinReader::from_file(path);
  std::vector<uint8_t> bytes(r.remaining());
  r.bytes(bytes.data(), bytes.size());
  return deserialize_town(bytes);
}

std::string dump_town_text(const TownMap& town) {
  std::ostringstream os;
  os << "town: " << town.lanes.size() << " lanes, " << town.junctions.size()
     << " junctions, " << town.lights.size() << " lights, "
     << town.spawn_points.size() << " spawns\n";
  for (const LaneSegment& l : town.lanes) {
    os << "lane " << l.id << ": len=" << l.length << " width=" << l.width
       << " junction=" << l.junction_id << " succ=[";
    for (size_t i = 0; i < l.successors.size(); ++i)
      os << (i ? "," : "") << l.successors[i];
    os << "] from (" << l.centerline.front().x << "," << l.centerline.front().y
       << ") to (" << l.centerline.back().x << "," << l.centerline.back().y << ")\n";
  }
  for (const TrafficLight& t : town.lights) {
    os << "light " << t.id << ": lane=" << t.controlled_lane
       << " junction=" << t.junction_id << " group=" << t.conflict_group
       << " zone=(" << t.stop_zone.center.x << "," << t.stop_zone.center.y
       << " h=" << t.stop_zone.heading << ") clock=" << t.clock << "\n";
  }
  return os.str();
}

}  // namespace bevdrive::world
