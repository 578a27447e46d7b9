#include "stereotrack/pipeline/realtime.hpp"

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <thread>

namespace stereotrack {
namespace {

using Clock = std::chrono::steady_clock;

StageReport dropped_report(std::size_t index, double timestamp) {
  StageReport r;
  r.frame_id = index;
  r.timestamp = timestamp;
  r.dropped = true;
  r.status = TrackStatus::kDropped;
  return r;
}

void sleep_seconds(double s) {
  if (s > 0.0) {
    std::this_thread::sleep_for(std::chrono::duration<double>(s));
  }
}

RunSummary run_fast(std::span<const double> timestamps, const FrameProcessor& process, double delay) {
  RunSummary summary;
  summary.reports.reserve(timestamps.size());
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    summary.reports.push_back(process(i));
    sleep_seconds(delay);
  }
  return summary;
}

RunSummary run_virtual(std::span<const double> timestamps, const FrameProcessor& process,
                       const RealtimeOptions& options) {
  RunSummary summary;
  summary.reports.reserve(timestamps.size());
  double busy_until = -1e300;
  const double t0 = timestamps.empty() ? 0.0 : timestamps.front();
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    const double arrival = (timestamps[i] - t0) / options.speed;
    if (arrival < busy_until) {
      summary.reports.push_back(dropped_report(i, timestamps[i]));
      ++summary.drops;
      continue;
    }
    StageReport r = process(i);
    busy_until = arrival + r.time(Stage::kTotal) * 1e-6 + options.injected_delay;
    summary.reports.push_back(r);
  }
  return summary;
}

RunSummary run_threaded(std::span<const double> timestamps, const FrameProcessor& process,
                        const RealtimeOptions& options) {
  const std::size_t n = timestamps.size();
  std::vector<std::optional<StageReport>> reports(n);
  std::mutex mutex;
  std::condition_variable cv;
  std::optional<std::size_t> slot;
  bool busy = false;
  bool done = false;

  std::thread worker([&] {
    for (;;) {
      std::size_t index = 0;
      {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return slot.has_value() || done; });
        if (!slot) {
          return;
        }
        index = *slot;
      }
      StageReport r = process(index);
      sleep_seconds(options.injected_delay);
      {
        std::lock_guard lock(mutex);
        reports[index] = r;
        slot.reset();
        busy = false;
      }
      cv.notify_all();
    }
  });

  RunSummary summary;
  const auto start = Clock::now();
  const double t0 = n == 0 ? 0.0 : timestamps.front();
  for (std::size_t i = 0; i < n; ++i) {
    const auto due = start + std::chrono::duration_cast<Clock::duration>(
                                 std::chrono::duration<double>((timestamps[i] - t0) / options.speed));
    std::this_thread::sleep_until(due);
    std::lock_guard lock(mutex);
    if (busy) {
      reports[i] = dropped_report(i, timestamps[i]);
      ++summary.drops;
      continue;
    }
    busy = true;
    slot = i;
    cv.notify_all();
  }
  {
    std::unique_lock lock(mutex);
    cv.wait(lock, [&] { return !busy; });
    done = true;
  }
  cv.notify_all();
  worker.join();
  summary.reports.reserve(n);
  for (auto& r : reports) {
    summary.reports.push_back(*r);
  }
  return summary;
}

}  // namespace

RunSummary run_realtime(std::span<const double> timestamps, const FrameProcessor& process,
                        const RealtimeOptions& options) {
  if (options.mode == RunMode::kFast) {
    return run_fast(timestamps, process, options.injected_delay);
  }
  if (options.virtual_time) {
    return run_virtual(timestamps, process, options);
  }
  return run_threaded(timestamps, process, options);
}

}  // namespace stereotrack
