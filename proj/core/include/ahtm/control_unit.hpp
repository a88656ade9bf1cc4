#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>
#include <vector>

namespace ahtm {

enum class Memory : std::uint8_t { RM, SM };

std::string_view to_string(Memory m);

struct CuConfig {
  std::uint32_t window = 4;
  double boost_factor = 1.5;
  /// Skip SM inference on steps the RM serves correctly.
  bool skip_sm_when_rm_confident = false;
  /// Forces every choice; SM pinning reproduces plain HTM.
  std::optional<Memory> pin;

  void validate() const;
};

/// Windowed arbitration between the reflex and sequence memories.
class ControlUnit {
 public:
  explicit ControlUnit(CuConfig cfg = {});

  const CuConfig& config() const noexcept { return cfg_; }

  /// RM iff the RM window sum is not above the SM window sum.
  Memory choose() const;
  /// Throws ContractViolation for scores outside [0,1].
  void record_outcome(double rm_ars, double sm_ars);

  double rm_sum() const;
  double sm_sum() const;
  std::size_t filled() const noexcept { return rm_.size(); }
  void clear();

 private:
  CuConfig cfg_;
  std::deque<double> rm_;
  std::deque<double> sm_;
};

/// Choice of the unpinned rule for the given sums.
Memory arbitrate(double rm_sum, double sm_sum);

enum class MemoryAction : std::uint8_t {
  EmitRm,
  EmitSm,
  RmUpdate,     // count the observed transition
  RmDecrement,  // lower the count of the wrong RM prediction
  RmRetrain,    // count the transition the SM predicted correctly
  SmLearn,
  SmLearnBoosted,
};

std::string_view to_string(MemoryAction a);

/// The four correctness cases. Actions are listed in execution order.
std::vector<MemoryAction> apply_training_rules(bool rm_correct, bool sm_correct);

}  // namespace ahtm
