#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "stereotrack/parallel/engine.hpp"
#include "stereotrack/parallel/parallel_map.hpp"
#include "stereotrack/parallel/staging.hpp"

namespace st = stereotrack;

namespace {

std::uint64_t mix(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  return x ^ (x >> 33);
}

}  // namespace

TEST(ParallelMap, EmptyAndIdentity) {
  for (st::Backend b : {st::Backend::kSequential, st::Backend::kParallel}) {
    st::Engine engine(b, 4);
    EXPECT_TRUE(engine.parallel_map<int>(0, [](std::size_t) { return 1; }).empty());
    const auto out = engine.parallel_map<int>(1000, [](std::size_t i) { return static_cast<int>(i) + 1; });
    std::vector<int> expect(1000);
    std::iota(expect.begin(), expect.end(), 1);
    EXPECT_EQ(out, expect);
  }
}

TEST(ParallelMap, RandomPureFunctionsAgreeAcrossBackends) {
  st::Engine seq(st::Backend::kSequential);
  st::Engine par(st::Backend::kParallel, 4);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = rng() % 300;
    const std::uint64_t salt = rng();
    const int rounds = 1 + static_cast<int>(rng() % 4);
    auto fn = [salt, rounds](std::size_t i) {
      std::uint64_t x = i ^ salt;
      for (int r = 0; r < rounds; ++r) {
        x = mix(x + static_cast<std::uint64_t>(r));
      }
      return x;
    };
    ASSERT_EQ(seq.parallel_map<std::uint64_t>(n, fn), par.parallel_map<std::uint64_t>(n, fn)) << "trial " << trial;
  }
}

TEST(ParallelMap, LowestFailingIndexIsRethrown) {
  for (st::Backend b : {st::Backend::kSequential, st::Backend::kParallel}) {
    st::Engine engine(b, 4);
    try {
      engine.parallel_for(1000, [](std::size_t i) {
        if (i == 777 || i == 123 || i == 999) {
          throw std::runtime_error(std::to_string(i));
        }
      });
      FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "123");
    }
  }
}

TEST(ParallelMap, SpecIsAccountedOnTheLedger) {
  st::Engine engine(st::Backend::kParallel, 3);
  st::StagingLedger ledger;
  st::ParallelMapSpec spec;
  spec.item_count = 10;
  spec.inputs = {{"in.a", 100}, {"in.b", 50}};
  spec.output_slot_bytes = 8;
  spec.kernel = "k";
  const auto out =
      st::parallel_map<double>(engine, spec, [](std::size_t i) { return 0.5 * static_cast<double>(i); }, &ledger, "s");
  ASSERT_EQ(out.size(), 10U);
  EXPECT_EQ(ledger.stage_bytes("s").host_to_backend, 150U);
  EXPECT_EQ(ledger.stage_bytes("s").backend_to_host, 80U);
  st::parallel_map<double>(engine, spec, [](std::size_t i) { return static_cast<double>(i); }, &ledger, "s");
  EXPECT_EQ(ledger.stage_bytes("s").host_to_backend, 150U);
  EXPECT_EQ(ledger.stage_bytes("s").backend_to_host, 160U);
}

TEST(Staging, FreshBufferThenResident) {
  st::StagingLedger ledger;
  EXPECT_EQ(ledger.stage_buffer("stage", "buf", 1048576, st::Direction::kHostToBackend), 1048576U);
  EXPECT_EQ(ledger.stage_bytes("stage").host_to_backend, 1048576U);
  EXPECT_EQ(ledger.stage_buffer("stage", "buf", 1048576, st::Direction::kHostToBackend), 0U);
  EXPECT_EQ(ledger.stage_bytes("stage").host_to_backend, 1048576U);
  ledger.produce_on_host("buf");
  EXPECT_EQ(ledger.stage_buffer("stage", "buf", 1048576, st::Direction::kHostToBackend), 1048576U);
}

namespace {

// Independent model: two validity bits per buffer.
struct ReplayOracle {
  struct Copies {
    bool host = true;
    bool backend = false;
  };
  std::map<std::string, Copies> buffers;
  std::map<std::string, st::StageBytes> stages;
  std::uint64_t requested = 0;
  std::uint64_t suppressed = 0;

  void stage(const std::string& s, const std::string& b, std::uint64_t n, st::Direction d) {
    requested += n;
    Copies& c = buffers[b];
    st::StageBytes& sb = stages[s];
    if (d == st::Direction::kHostToBackend) {
      if (c.backend) {
        suppressed += n;
        return;
      }
      sb.host_to_backend += n;
      c.backend = true;
    } else {
      if (c.host) {
        suppressed += n;
        return;
      }
      sb.backend_to_host += n;
      c.host = true;
    }
  }
  void produce_backend(const std::string& b) { buffers[b] = {false, true}; }
  void produce_host(const std::string& b) { buffers[b] = {true, false}; }
  void release() {
    for (auto it = buffers.begin(); it != buffers.end();) {
      if (!it->second.host) {
        it = buffers.erase(it);
      } else {
        it->second.backend = false;
        ++it;
      }
    }
  }
};

}  // namespace

TEST(Staging, ScriptedSequencesMatchReplayOracle) {
  std::mt19937_64 rng(2);
  const std::vector<std::string> names{"a", "b", "c", "d"};
  const std::vector<std::string> stages{"s1", "s2", "s3"};
  for (int trial = 0; trial < 500; ++trial) {
    st::StagingLedger ledger;
    ReplayOracle oracle;
    for (int step = 0; step < 60; ++step) {
      const std::string& b = names[rng() % names.size()];
      const std::string& s = stages[rng() % stages.size()];
      const std::uint64_t n = rng() % 5000;
      switch (rng() % 6) {
        case 0:
        case 1:
          ledger.stage_buffer(s, b, n, st::Direction::kHostToBackend);
          oracle.stage(s, b, n, st::Direction::kHostToBackend);
          break;
        case 2:
          ledger.stage_buffer(s, b, n, st::Direction::kBackendToHost);
          oracle.stage(s, b, n, st::Direction::kBackendToHost);
          break;
        case 3:
          ledger.produce_on_backend(b);
          oracle.produce_backend(b);
          break;
        case 4:
          ledger.produce_on_host(b);
          oracle.produce_host(b);
          break;
        default:
          ledger.release_backend();
          oracle.release();
          break;
      }
    }
    st::StageBytes total;
    for (const std::string& s : stages) {
      ASSERT_EQ(ledger.stage_bytes(s), oracle.stages[s]) << "trial " << trial << " stage " << s;
      total += oracle.stages[s];
    }
    ASSERT_EQ(ledger.total(), total);
    // Conservation: everything requested was either counted or suppressed.
    ASSERT_EQ(ledger.requested_bytes(), oracle.requested);
    ASSERT_EQ(ledger.suppressed_bytes(), oracle.suppressed);
    ASSERT_EQ(total.host_to_backend + total.backend_to_host + ledger.suppressed_bytes(), ledger.requested_bytes());
  }
}

TEST(Staging, ResetKeepsResidency) {
  st::StagingLedger ledger;
  ledger.stage_buffer("s", "buf", 10, st::Direction::kHostToBackend);
  ledger.reset_counters();
  EXPECT_EQ(ledger.total(), st::StageBytes{});
  EXPECT_EQ(ledger.residency("buf"), st::Residency::kBoth);
  EXPECT_EQ(ledger.stage_buffer("s", "buf", 10, st::Direction::kHostToBackend), 0U);
}

TEST(Engine, BackendNames) {
  EXPECT_EQ(st::parse_backend("seq"), st::Backend::kSequential);
  EXPECT_EQ(st::parse_backend("par"), st::Backend::kParallel);
  EXPECT_EQ(st::backend_name(st::Backend::kParallel), "par");
  st::Engine seq(st::Backend::kSequential, 8);
  EXPECT_EQ(seq.workers(), 1U);
}
