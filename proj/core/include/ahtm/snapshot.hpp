#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "ahtm/error.hpp"
#include "ahtm/pipeline.hpp"

namespace ahtm {

inline constexpr int kSnapshotSchemaVersion = 1;

/// Malformed snapshot content; `module()` names the section at fault
/// (`sp`, `sm`, `rm` or `snapshot` for the envelope).
class SnapshotError : public ValidationError {
 public:
  SnapshotError(std::string module, const std::string& what)
      : ValidationError(module + ": " + what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

nlohmann::json snapshot_sp(const SpatialPooler& sp);
PermanenceMatrix restore_sp(const nlohmann::json& j);

nlohmann::json snapshot_sm(const SequenceMemory& sm);
void restore_sm(SequenceMemory& sm, const nlohmann::json& j);

nlohmann::json snapshot_rm(const ReflexTable& rm);
ReflexTable restore_rm(const ReflexConfig& cfg, const nlohmann::json& j);

/// Learned state of every memory (SP, SM and, in AHTM mode, the RM table).
/// The CAM-backed table is not snapshotted; H_AHTM snapshots carry SP and
/// SM only.
void save_snapshot(const Pipeline& p, std::ostream& out);
/// Restores learned state into a pipeline built from the same config.
/// Throws SnapshotError naming the failing module.
void load_snapshot(Pipeline& p, std::istream& in);

/// Structural check of a snapshot file without a pipeline. Throws
/// SnapshotError naming the failing module.
void validate_snapshot(std::istream& in);

}  // namespace ahtm
