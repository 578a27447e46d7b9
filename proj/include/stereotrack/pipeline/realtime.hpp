#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "stereotrack/pipeline/report.hpp"

namespace stereotrack {

enum class RunMode { kRealtime, kFast };

struct RealtimeOptions {
  RunMode mode = RunMode::kFast;
  double speed = 1.0;           // dataset seconds per wall second
  double injected_delay = 0.0;  // seconds added to every processed frame
  // Advance a simulated clock by each frame's reported total time plus the
  // injected delay instead of using wall-clock threads.
  bool virtual_time = false;
};

struct RunSummary {
  std::size_t drops = 0;
  std::vector<StageReport> reports;  // one per frame, in order
};

// Processes frame `index` and returns its report.
using FrameProcessor = std::function<StageReport(std::size_t index)>;

/// Presents frames at their timestamps. A frame arriving while the previous
/// one is still being processed is dropped (depth-1 slot). In fast mode
/// every frame is processed in order.
RunSummary run_realtime(std::span<const double> timestamps, const FrameProcessor& process,
                        const RealtimeOptions& options);

}  // namespace stereotrack
