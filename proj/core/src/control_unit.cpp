#include "ahtm/control_unit.hpp"

#include <numeric>
#include <string>

#include "ahtm/error.hpp"

namespace ahtm {

std::string_view to_string(Memory m) { return m == Memory::RM ? "RM" : "SM"; }

std::string_view to_string(MemoryAction a) {
  switch (a) {
    case MemoryAction::EmitRm: return "emit_rm";
    case MemoryAction::EmitSm: return "emit_sm";
    case MemoryAction::RmUpdate: return "rm_update";
    case MemoryAction::RmDecrement: return "rm_decrement";
    case MemoryAction::RmRetrain: return "rm_retrain";
    case MemoryAction::SmLearn: return "sm_learn";
    case MemoryAction::SmLearnBoosted: return "sm_learn_boosted";
  }
  return "unknown";
}

void CuConfig::validate() const {
  if (window == 0) throw ValidationError("cu.window must be positive");
  if (!(boost_factor >= 1.0)) throw ValidationError("cu.boost_factor must be >= 1");
}

ControlUnit::ControlUnit(CuConfig cfg) : cfg_(cfg) { cfg_.validate(); }

Memory arbitrate(double rm_sum, double sm_sum) { return rm_sum <= sm_sum ? Memory::RM : Memory::SM; }

double ControlUnit::rm_sum() const { return std::accumulate(rm_.begin(), rm_.end(), 0.0); }
double ControlUnit::sm_sum() const { return std::accumulate(sm_.begin(), sm_.end(), 0.0); }

Memory ControlUnit::choose() const {
  if (cfg_.pin) return *cfg_.pin;
  return arbitrate(rm_sum(), sm_sum());
}

void ControlUnit::record_outcome(double rm_ars, double sm_ars) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(rm_ars) || !in_unit(sm_ars)) {
    throw ContractViolation("control unit: scores must lie in [0,1], got " + std::to_string(rm_ars) + ", " +
                            std::to_string(sm_ars));
  }
  rm_.push_back(rm_ars);
  sm_.push_back(sm_ars);
  while (rm_.size() > cfg_.window) {
    rm_.pop_front();
    sm_.pop_front();
  }
}

void ControlUnit::clear() {
  rm_.clear();
  sm_.clear();
}

std::vector<MemoryAction> apply_training_rules(bool rm_correct, bool sm_correct) {
  using A = MemoryAction;
  if (!rm_correct && !sm_correct) return {A::RmUpdate, A::RmDecrement, A::SmLearn};
  if (!rm_correct && sm_correct) return {A::EmitSm, A::RmDecrement, A::RmRetrain};
  if (rm_correct && !sm_correct) return {A::EmitRm, A::SmLearn};
  return {A::EmitRm, A::SmLearnBoosted};
}

}  // namespace ahtm
