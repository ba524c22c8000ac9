#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <span>
#include <thread>
#include <vector>

#include "vecflow/engine.hpp"
#include "vecflow/hs_graph.hpp"
#include "vecflow/multilabel.hpp"
#include "vecflow/types.hpp"

namespace vecflow {

struct Job {
  std::vector<float> query;
  LabelQuery labels;
  SearchParams params;
  std::uint64_t query_ordinal = 0;
};

using JobHandler = std::function<TopKResult(const Job&)>;

namespace detail {

struct Completion {
  enum : std::uint32_t { kPending = 0, kDone = 1, kFailed = 2, kCancelled = 3 };
  std::atomic<std::uint32_t> state{kPending};
  std::atomic<bool> claimed{false};
  TopKResult result;
  std::exception_ptr error;
};

}  // namespace detail

class JobTicket {
 public:
  JobTicket() = default;

  std::uint64_t job_id() const { return job_id_; }
  bool valid() const { return completion_ != nullptr; }
  bool ready() const;

 private:
  friend class Executor;
  JobTicket(std::uint64_t id, std::shared_ptr<detail::Completion> completion)
      : job_id_(id), completion_(std::move(completion)) {}

  std::uint64_t job_id_ = 0;
  std::shared_ptr<detail::Completion> completion_;
};

struct ExecutorOptions {
  std::size_t workers = 0;   // 0: hardware concurrency
  std::size_t capacity = 0;  // 0: 4 * workers
  std::size_t spin_limit = 256;
};

enum class ShutdownMode { kDrain, kCancel };

// Persistent workers polling a bounded multi-producer multi-consumer ring.
// submit blocks while `capacity` jobs are in flight (queued or running).
class Executor {
 public:
  Executor(JobHandler handler, const ExecutorOptions& options = {});
  // Jobs run against `index`, which must outlive the executor.
  Executor(const VecFlowIndex& index, const ExecutorOptions& options = {});
  ~Executor();

  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;

  JobTicket submit(Job job);

  // Resolves a ticket exactly once. A second call throws LifecycleError; a
  // job dropped by ShutdownMode::kCancel throws CancelledError.
  TopKResult await(JobTicket& ticket);

  // Stops accepting jobs and joins the workers. kDrain finishes queued jobs
  // first. Repeated calls are no-ops.
  void shutdown(ShutdownMode mode = ShutdownMode::kDrain);

  std::size_t workers() const { return threads_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool running() const { return accepting_.load(); }
  // Highest number of simultaneously in-flight jobs observed.
  std::size_t peak_in_flight() const { return peak_in_flight_.load(); }

 private:
  struct Pending {
    Job job;
    std::shared_ptr<detail::Completion> completion;
  };
  struct Cell {
    std::atomic<std::size_t> sequence{0};
    Pending pending;
  };

  bool try_push(Pending& pending);
  bool try_pop(Pending& out);
  void acquire_slot();
  void release_slot();
  void worker_loop();
  void run(Pending& pending);

  JobHandler handler_;
  std::size_t capacity_ = 0;
  std::size_t spin_limit_ = 0;
  std::unique_ptr<Cell[]> cells_;

  alignas(64) std::atomic<std::size_t> enqueue_pos_{0};
  alignas(64) std::atomic<std::size_t> dequeue_pos_{0};
  alignas(64) std::atomic<std::uint32_t> epoch_{0};
  alignas(64) std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> peak_in_flight_{0};
  std::atomic<std::uint64_t> next_job_id_{1};
  std::atomic<std::size_t> submitters_{0};
  std::atomic<bool> accepting_{true};
  std::atomic<bool> stopping_{false};
  std::atomic<bool> cancel_{false};
  std::atomic<bool> joined_{false};

  std::vector<std::thread> threads_;
};

// Reference dispatcher for comparison: spawns and joins `workers` threads
// for every batch of `batch_size` consecutive jobs.
std::vector<TopKResult> run_dispatch_per_batch(const JobHandler& handler, std::span<const Job> jobs,
                                               std::size_t batch_size, std::size_t workers);

JobHandler make_index_handler(const VecFlowIndex& index);

}  // namespace vecflow
