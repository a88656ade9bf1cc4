#include "ahtm/snapshot.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ahtm {

using nlohmann::json;

namespace {

template <typename F>
auto guarded(const std::string& module, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SnapshotError&) {
    throw;
  } catch (const std::exception& e) {
    throw SnapshotError(module, e.what());
  }
}

}  // namespace

json snapshot_sp(const SpatialPooler& sp) {
  const auto& m = sp.matrix();
  json pools = json::array();
  json perms = json::array();
  for (std::uint32_t c = 0; c < m.columns(); ++c) {
    json bits = json::array();
    json values = json::array();
    for (BitIndex b : m.pool(c)) {
      bits.push_back(b);
      values.push_back(m.permanence(c, b));
    }
    pools.push_back(std::move(bits));
    perms.push_back(std::move(values));
  }
  return {{"columns", m.columns()},
          {"input_width", m.input_width()},
          {"connect_threshold", m.connect_threshold()},
          {"pools", std::move(pools)},
          {"permanences", std::move(perms)}};
}

PermanenceMatrix restore_sp(const json& j) {
  return guarded("sp", [&] {
    const auto columns = j.at("columns").get<std::uint32_t>();
    const auto width = j.at("input_width").get<std::uint32_t>();
    PermanenceMatrix m(columns, width, j.at("connect_threshold").get<double>());
    const auto& pools = j.at("pools");
    const auto& perms = j.at("permanences");
    if (pools.size() != columns || perms.size() != columns) throw SnapshotError("sp", "pool count != columns");
    for (std::uint32_t c = 0; c < columns; ++c) {
      const auto bits = pools[c].get<std::vector<BitIndex>>();
      const auto values = perms[c].get<std::vector<float>>();
      if (bits.size() != values.size()) throw SnapshotError("sp", "column " + std::to_string(c) + " length mismatch");
      m.set_pool(c, bits);
      for (std::size_t i = 0; i < bits.size(); ++i) {
        if (!(values[i] >= 0.0f && values[i] <= 1.0f)) throw SnapshotError("sp", "permanence outside [0,1]");
        m.set_permanence(c, bits[i], values[i]);
      }
    }
    return m;
  });
}

json snapshot_sm(const SequenceMemory& sm) {
  json cells = json::array();
  const auto& all = sm.all_segments();
  for (CellIndex c = 0; c < all.size(); ++c) {
    if (all[c].empty()) continue;
    json segs = json::array();
    for (const auto& seg : all[c]) {
      json syns = json::array();
      for (const auto& s : seg.synapses) syns.push_back({s.presynaptic, s.permanence, s.on});
      segs.push_back({{"last_used", seg.last_used}, {"synapses", std::move(syns)}});
    }
    cells.push_back({{"cell", c}, {"segments", std::move(segs)}});
  }
  const auto prev_active = sm.previous_active();
  const auto prev_winners = sm.previous_winners();
  return {{"columns", sm.config().columns},
          {"cells_per_column", sm.config().cells_per_column},
          {"iteration", sm.iteration()},
          {"rng_state", sm.rng_state()},
          {"prev_active", std::vector<CellIndex>(prev_active.begin(), prev_active.end())},
          {"prev_winners", std::vector<CellIndex>(prev_winners.begin(), prev_winners.end())},
          {"cells", std::move(cells)}};
}

void restore_sm(SequenceMemory& sm, const json& j) {
  guarded("sm", [&] {
    if (j.at("columns").get<std::uint32_t>() != sm.config().columns ||
        j.at("cells_per_column").get<std::uint32_t>() != sm.config().cells_per_column) {
      throw SnapshotError("sm", "network shape differs from config");
    }
    std::vector<std::vector<Segment>> cells(sm.cell_count());
    for (const auto& entry : j.at("cells")) {
      const auto c = entry.at("cell").get<CellIndex>();
      if (c >= cells.size()) throw SnapshotError("sm", "cell index out of range");
      for (const auto& s : entry.at("segments")) {
        Segment seg;
        seg.last_used = s.at("last_used").get<std::uint64_t>();
        for (const auto& syn : s.at("synapses")) {
          Synapse y{syn.at(0).get<CellIndex>(), syn.at(1).get<float>(), syn.at(2).get<bool>()};
          if (!(y.permanence >= 0.0f && y.permanence <= 1.0f)) throw SnapshotError("sm", "permanence outside [0,1]");
          seg.synapses.push_back(y);
        }
        cells[c].push_back(std::move(seg));
      }
    }
    sm.restore(std::move(cells), j.at("iteration").get<std::uint64_t>(), j.at("rng_state").get<std::string>(),
               j.at("prev_active").get<std::vector<CellIndex>>(), j.at("prev_winners").get<std::vector<CellIndex>>());
    if (!sm.on_flags_consistent()) throw SnapshotError("sm", "synapse ON flags disagree with permanences");
  });
}

json snapshot_rm(const ReflexTable& rm) {
  std::ostringstream lines;
  rm.dump(lines);
  json out = json::array();
  std::istringstream in(lines.str());
  std::string line;
  while (std::getline(in, line)) out.push_back(json::parse(line));
  return out;
}

ReflexTable restore_rm(const ReflexConfig& cfg, const json& j) {
  return guarded("rm", [&] {
    if (!j.is_array()) throw SnapshotError("rm", "expected an array of entries");
    std::ostringstream lines;
    for (const auto& e : j) lines << e.dump() << '\n';
    std::istringstream in(lines.str());
    return ReflexTable::restore(cfg, in);
  });
}

void save_snapshot(const Pipeline& p, std::ostream& out) {
  json j{{"schema_version", kSnapshotSchemaVersion},
         {"mode", std::string(to_string(p.config().mode))},
         {"sp", snapshot_sp(p.spatial_pooler())},
         {"sm", snapshot_sm(p.sequence_memory())}};
  if (const auto* table = dynamic_cast<const ReflexTable*>(p.reflex())) j["rm"] = snapshot_rm(*table);
  out << j.dump() << '\n';
}

namespace {

json read_envelope(std::istream& in) {
  json j = guarded("snapshot", [&] { return json::parse(in); });
  if (!j.is_object()) throw SnapshotError("snapshot", "top level is not an object");
  if (!j.contains("schema_version") || j["schema_version"] != kSnapshotSchemaVersion) {
    throw SnapshotError("snapshot", "missing or unsupported schema_version");
  }
  for (const char* key : {"sp", "sm"}) {
    if (!j.contains(key)) throw SnapshotError(key, "section missing");
  }
  return j;
}

}  // namespace

void load_snapshot(Pipeline& p, std::istream& in) {
  const json j = read_envelope(in);
  const std::string mode(to_string(p.config().mode));
  if (j.value("mode", std::string{}) != mode) {
    throw SnapshotError("snapshot", "saved in mode '" + j.value("mode", std::string{}) + "', pipeline runs " + mode);
  }
  PermanenceMatrix m = restore_sp(j["sp"]);
  if (m.columns() != p.config().sp.columns || m.input_width() != p.config().encoder.width) {
    throw SnapshotError("sp", "matrix shape differs from config");
  }
  std::optional<ReflexTable> table;
  auto* live = dynamic_cast<ReflexTable*>(p.reflex());
  if (live != nullptr && j.contains("rm")) table = restore_rm(p.config().rm, j["rm"]);
  restore_sm(p.sequence_memory(), j["sm"]);
  p.spatial_pooler().matrix() = std::move(m);
  if (table) *live = std::move(*table);
}

void validate_snapshot(std::istream& in) {
  const json j = read_envelope(in);
  const PermanenceMatrix m = restore_sp(j["sp"]);
  guarded("sm", [&] {
    SmConfig cfg;
    cfg.columns = j["sm"].at("columns").get<std::uint32_t>();
    cfg.cells_per_column = j["sm"].at("cells_per_column").get<std::uint32_t>();
    SequenceMemory sm(cfg);
    restore_sm(sm, j["sm"]);
  });
  if (j.contains("rm")) {
    ReflexConfig cfg{std::size_t{1} << 32, ReflexLayout::Keyed, 0};
    restore_rm(cfg, j["rm"]);
  }
}

}  // namespace ahtm
