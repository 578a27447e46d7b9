#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>
#include <vector>

namespace stereotrack {

enum class Backend { kSequential, kParallel };

Backend parse_backend(std::string_view name);
std::string_view backend_name(Backend backend);

/// Non-owning reference to a callable `void(std::size_t, std::size_t)`.
class ChunkFn {
 public:
  template <class F>
  ChunkFn(F& f) : object_(&f), call_([](void* o, std::size_t b, std::size_t e) { (*static_cast<F*>(o))(b, e); }) {}

  void operator()(std::size_t begin, std::size_t end) const { call_(object_, begin, end); }

 private:
  void* object_;
  void (*call_)(void*, std::size_t, std::size_t);
};

/// Executes per-item pure functions either inline or over a fixed pool of
/// workers using static contiguous chunks. Synchronous: every call returns
/// after all items are done. If items throw, the exception of the lowest
/// failing index is rethrown.
class Engine {
 public:
  explicit Engine(Backend backend = Backend::kSequential, unsigned workers = 0);
  ~Engine();

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  Backend backend() const { return backend_; }
  unsigned workers() const { return workers_; }

  // fn(i) for every i in [0, n).
  template <class F>
  void parallel_for(std::size_t n, F&& fn) {
    auto chunk = [&fn](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        fn(i);
      }
    };
    run(n, chunk);
  }

  // output[i] = fn(i).
  template <class T, class F>
  std::vector<T> parallel_map(std::size_t n, F&& fn) {
    std::vector<T> out(n);
    parallel_for(n, [&](std::size_t i) { out[i] = fn(i); });
    return out;
  }

 private:
  struct ChunkError {
    std::size_t index = 0;
    std::exception_ptr error;
  };

  void run(std::size_t n, ChunkFn chunk);
  void run_chunk(std::size_t chunk_index, ChunkFn chunk, std::size_t n, std::size_t chunks, ChunkError& err);
  void worker_loop(unsigned worker);

  Backend backend_;
  unsigned workers_;
  std::vector<std::thread> threads_;

  std::mutex mutex_;
  std::condition_variable work_cv_;
  std::condition_variable done_cv_;
  std::uint64_t generation_ = 0;
  bool stopping_ = false;
  std::size_t pending_ = 0;

  // Current job, valid while pending_ > 0.
  const ChunkFn* job_ = nullptr;
  std::size_t job_items_ = 0;
  std::size_t job_chunks_ = 0;
  std::vector<ChunkError>* job_errors_ = nullptr;
};

}  // namespace stereotrack
