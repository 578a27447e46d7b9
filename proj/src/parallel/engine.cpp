#include "stereotrack/parallel/engine.hpp"

#include <algorithm>
#include <limits>

#include "stereotrack/core/error.hpp"

namespace stereotrack {
namespace {

constexpr std::size_t kNoError = std::numeric_limits<std::size_t>::max();

}  // namespace

Backend parse_backend(std::string_view name) {
  if (name == "seq") {
    return Backend::kSequential;
  }
  if (name == "par") {
    return Backend::kParallel;
  }
  throw ConfigError("unknown backend '" + std::string(name) + "' (expected seq or par)");
}

std::string_view backend_name(Backend backend) {
  return backend == Backend::kSequential ? "seq" : "par";
}

Engine::Engine(Backend backend, unsigned workers) : backend_(backend) {
  if (workers == 0) {
    workers = std::max(1U, std::thread::hardware_concurrency());
  }
  workers_ = backend == Backend::kSequential ? 1U : workers;
  // The calling thread executes chunk 0.
  for (unsigned w = 1; w < workers_; ++w) {
    threads_.emplace_back([this, w] { worker_loop(w); });
  }
}

Engine::~Engine() {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    stopping_ = true;
  }
  work_cv_.notify_all();
  for (auto& t : threads_) {
    t.join();
  }
}

void Engine::run_chunk(std::size_t chunk_index, ChunkFn chunk, std::size_t n, std::size_t chunks,
                       ChunkError& err) {
  const std::size_t begin = chunk_index * n / chunks;
  const std::size_t end = (chunk_index + 1) * n / chunks;
  // Items run one at a time so a failure can be attributed to its index.
  for (std::size_t i = begin; i < end; ++i) {
    try {
      chunk(i, i + 1);
    } catch (...) {
      err.index = i;
      err.error = std::current_exception();
      return;
    }
  }
}

void Engine::run(std::size_t n, ChunkFn chunk) {
  if (n == 0) {
    return;
  }
  const std::size_t chunks = std::min<std::size_t>(workers_, n);
  std::vector<ChunkError> errors(chunks, ChunkError{kNoError, nullptr});
  if (chunks == 1) {
    run_chunk(0, chunk, n, 1, errors[0]);
  } else {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      job_ = &chunk;
      job_items_ = n;
      job_chunks_ = chunks;
      job_errors_ = &errors;
      pending_ = chunks - 1;
      ++generation_;
    }
    work_cv_.notify_all();
    run_chunk(0, chunk, n, chunks, errors[0]);
    std::unique_lock<std::mutex> lock(mutex_);
    done_cv_.wait(lock, [this] { return pending_ == 0; });
    job_ = nullptr;
  }
  const ChunkError* first = nullptr;
  for (const ChunkError& e : errors) {
    if (e.error && (first == nullptr || e.index < first->index)) {
      first = &e;
    }
  }
  if (first != nullptr) {
    std::rethrow_exception(first->error);
  }
}

void Engine::worker_loop(unsigned worker) {
  std::uint64_t seen = 0;
  for (;;) {
    const ChunkFn* job = nullptr;
    std::size_t items = 0;
    std::size_t chunks = 0;
    std::vector<ChunkError>* errors = nullptr;
    {
      std::unique_lock<std::mutex> lock(mutex_);
      work_cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
      if (stopping_) {
        return;
      }
      seen = generation_;
      job = job_;
      items = job_items_;
      chunks = job_chunks_;
      errors = job_errors_;
    }
    if (worker < chunks) {
      run_chunk(worker, *job, items, chunks, (*errors)[worker]);
      std::lock_guard<std::mutex> lock(mutex_);
      if (--pending_ == 0) {
        done_cv_.notify_one();
      }
    }
  }
}

}  // namespace stereotrack
