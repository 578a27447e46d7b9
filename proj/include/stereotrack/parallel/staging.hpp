#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace stereotrack {

enum class Residency { kHost, kBackend, kBoth };
enum class Direction { kHostToBackend, kBackendToHost };

struct StageBytes {
  std::uint64_t host_to_backend = 0;
  std::uint64_t backend_to_host = 0;

  StageBytes& operator+=(const StageBytes& o) {
    host_to_backend += o.host_to_backend;
    backend_to_host += o.backend_to_host;
    return *this;
  }
  bool operator==(const StageBytes&) const = default;
};

/// Logical bytes crossing the host/backend boundary, per stage, plus the
/// residency of every named buffer. On a host-only machine "backend" is a
/// bookkeeping state; the counts are what a discrete device would move.
class StagingLedger {
 public:
  // Adds `bytes` to the stage's counter for `direction` unless the
  // destination side already holds a valid copy. Returns the bytes counted.
  std::uint64_t stage_buffer(std::string_view stage, std::string_view buffer, std::size_t bytes, Direction direction);

  // The buffer was (re)written on one side; the other side's copy is stale.
  void produce_on_backend(std::string_view buffer);
  void produce_on_host(std::string_view buffer);

  // Drops every backend copy (what a stage boundary looks like when
  // residency is disabled).
  void release_backend();

  Residency residency(std::string_view buffer) const;
  StageBytes stage_bytes(std::string_view stage) const;
  StageBytes total() const;
  std::uint64_t suppressed_bytes() const { return suppressed_; }
  std::uint64_t requested_bytes() const { return requested_; }

  // Clears counters, keeps residency.
  void reset_counters();

 private:
  std::map<std::string, Residency, std::less<>> residency_;
  std::map<std::string, StageBytes, std::less<>> stages_;
  std::uint64_t suppressed_ = 0;
  std::uint64_t requested_ = 0;
};

}  // namespace stereotrack

namespace stereotrack {

struct InputBuffer {
  std::string name;
  std::size_t bytes = 0;
};

/// Shape of one data-parallel launch: item count, read-only inputs and the
/// per-item output slot. Outputs of distinct items occupy disjoint slots.
struct ParallelMapSpec {
  std::size_t item_count = 0;
  std::vector<InputBuffer> inputs;
  std::size_t output_slot_bytes = 0;
  std::string kernel;
};

// Stages the declared inputs host->backend and the output slots
// backend->host under `stage`.
void stage_parallel_map(StagingLedger& ledger, std::string_view stage, const ParallelMapSpec& spec);

}  // namespace stereotrack
