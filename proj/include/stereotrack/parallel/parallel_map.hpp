#pragma once

#include <string_view>
#include <vector>

#include "stereotrack/parallel/engine.hpp"
#include "stereotrack/parallel/staging.hpp"

namespace stereotrack {

/// output[i] = fn(i) for i < spec.item_count, identical under both backends.
/// When a ledger is given the launch is accounted under `stage`.
template <class T, class F>
std::vector<T> parallel_map(Engine& engine, const ParallelMapSpec& spec, F&& fn, StagingLedger* ledger = nullptr,
                            std::string_view stage = {}) {
  if (ledger != nullptr) {
    stage_parallel_map(*ledger, stage, spec);
  }
  return engine.parallel_map<T>(spec.item_count, fn);
}

}  // namespace stereotrack
