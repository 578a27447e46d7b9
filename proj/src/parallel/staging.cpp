#include "stereotrack/parallel/staging.hpp"

namespace stereotrack {

std::uint64_t StagingLedger::stage_buffer(std::string_view stage, std::string_view buffer, std::size_t bytes,
                                          Direction direction) {
  requested_ += bytes;
  auto it = residency_.find(buffer);
  if (it == residency_.end()) {
    it = residency_.emplace(std::string(buffer), Residency::kHost).first;
  }
  auto stage_it = stages_.find(stage);
  if (stage_it == stages_.end()) {
    stage_it = stages_.emplace(std::string(stage), StageBytes{}).first;
  }
  Residency& r = it->second;
  if (direction == Direction::kHostToBackend) {
    if (r == Residency::kBackend || r == Residency::kBoth) {
      suppressed_ += bytes;
      return 0;
    }
    stage_it->second.host_to_backend += bytes;
  } else {
    if (r == Residency::kHost || r == Residency::kBoth) {
      suppressed_ += bytes;
      return 0;
    }
    stage_it->second.backend_to_host += bytes;
  }
  r = Residency::kBoth;
  return bytes;
}

void StagingLedger::produce_on_backend(std::string_view buffer) {
  auto it = residency_.find(buffer);
  if (it == residency_.end()) {
    residency_.emplace(std::string(buffer), Residency::kBackend);
  } else {
    it->second = Residency::kBackend;
  }
}

void StagingLedger::produce_on_host(std::string_view buffer) {
  auto it = residency_.find(buffer);
  if (it == residency_.end()) {
    residency_.emplace(std::string(buffer), Residency::kHost);
  } else {
    it->second = Residency::kHost;
  }
}

void StagingLedger::release_backend() {
  for (auto it = residency_.begin(); it != residency_.end();) {
    if (it->second == Residency::kBackend) {
      // Backend-only data is gone; drop the entry entirely.
      it = residency_.erase(it);
    } else {
      it->second = Residency::kHost;
      ++it;
    }
  }
}

Residency StagingLedger::residency(std::string_view buffer) const {
  auto it = residency_.find(buffer);
  return it == residency_.end() ? Residency::kHost : it->second;
}

StageBytes StagingLedger::stage_bytes(std::string_view stage) const {
  auto it = stages_.find(stage);
  return it == stages_.end() ? StageBytes{} : it->second;
}

StageBytes StagingLedger::total() const {
  StageBytes t;
  for (const auto& [name, bytes] : stages_) {
    t += bytes;
  }
  return t;
}

void StagingLedger::reset_counters() {
  stages_.clear();
  suppressed_ = 0;
  requested_ = 0;
}

}  // namespace stereotrack

namespace stereotrack {

void stage_parallel_map(StagingLedger& ledger, std::string_view stage, const ParallelMapSpec& spec) {
  for (const InputBuffer& in : spec.inputs) {
    ledger.stage_buffer(stage, in.name, in.bytes, Direction::kHostToBackend);
  }
  const std::string out = spec.kernel + ".out";
  ledger.produce_on_backend(out);
  ledger.stage_buffer(stage, out, spec.item_count * spec.output_slot_bytes, Direction::kBackendToHost);
}

}  // namespace stereotrack
