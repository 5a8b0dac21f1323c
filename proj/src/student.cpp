#include "coldbrew/student.hpp"

namespace coldbrew {

KeyValues StudentConfig::describe() const {
  KeyValues kv{{"k", std::to_string(k)},
               {"bank_mode", to_string(bank_mode)},
               {"zero_virtual", zero_virtual ? "true" : "false"},
               {"widen_xi2", widen_xi2 ? "true" : "false"},
               {"temperature", "1"}};
  for (const auto& [key, v] : xi1.describe()) kv.emplace_back("xi1." + key, v);
  for (const auto& [key, v] : xi2.describe()) kv.emplace_back("xi2." + key, v);
  return kv;
}

SecondStageNodes second_stage_nodes(const DegreeSplits& splits, bool widen) {
  SecondStageNodes out;
  auto take = [&out](const Partition& p) {
    out.train.insert(out.train.end(), p.train.begin(), p.train.end());
    out.val.insert(out.val.end(), p.val.begin(), p.val.end());
  };
  take(splits.tail_parts);
  take(splits.isolation_parts);
  if (widen) {
    take(splits.head_parts);
    take(splits.middle_parts);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  return out;
}

}  // namespace coldbrew
