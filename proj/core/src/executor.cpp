#include "vecflow/executor.hpp"

#include <algorithm>
#include <string>

#include "vecflow/error.hpp"

namespace vecflow {

namespace {

void cpu_relax() { std::this_thread::yield(); }

class SubmitterGuard {
 public:
  explicit SubmitterGuard(std::atomic<std::size_t>& count) : count_(count) {
    count_.fetch_add(1, std::memory_order_seq_cst);
  }
  ~SubmitterGuard() { count_.fetch_sub(1, std::memory_order_release); }
  SubmitterGuard(const SubmitterGuard&) = delete;
  SubmitterGuard& operator=(const SubmitterGuard&) = delete;

 private:
  std::atomic<std::size_t>& count_;
};

}  // namespace

bool JobTicket::ready() const {
  return completion_ != nullptr &&
         completion_->state.load(std::memory_order_acquire) != detail::Completion::kPending;
}

Executor::Executor(JobHandler handler, const ExecutorOptions& options)
    : handler_(std::move(handler)), spin_limit_(options.spin_limit) {
  if (!handler_) throw ParameterError("executor needs a job handler");
  std::size_t workers = options.workers;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  capacity_ = options.capacity == 0 ? 4 * workers : options.capacity;

  cells_ = std::make_unique<Cell[]>(capacity_);
  for (std::size_t i = 0; i < capacity_; ++i) {
    cells_[i].sequence.store(i, std::memory_order_relaxed);
  }
  threads_.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) threads_.emplace_back([this] { worker_loop(); });
}

Executor::Executor(const VecFlowIndex& index, const ExecutorOptions& options)
    : Executor(make_index_handler(index), options) {}

Executor::~Executor() { shutdown(ShutdownMode::kDrain); }

// Bounded MPMC ring with per-cell sequence numbers. A cell at position p is
// writable when sequence == p and readable when sequence == p + 1.
bool Executor::try_push(Pending& pending) {
  std::size_t pos = enqueue_pos_.load(std::memory_order_relaxed);
  Cell* cell = nullptr;
  while (true) {
    cell = &cells_[pos % capacity_];
    const std::size_t seq = cell->sequence.load(std::memory_order_acquire);
    const auto diff = static_cast<std::ptrdiff_t>(seq) - static_cast<std::ptrdiff_t>(pos);
    if (diff == 0) {
      if (enqueue_pos_.compare_exchange_weak(pos, pos + 1, std::memory_order_relaxed)) break;
    } else if (diff < 0) {
      return false;
    } else {
      pos = enqueue_pos_.load(std::memory_order_relaxed);
    }
  }
  cell->pending = std::move(pending);
  cell->sequence.store(pos + 1, std::memory_order_release);
  return true;
}

bool Executor::try_pop(Pending& out) {
  std::size_t pos = dequeue_pos_.load(std::memory_order_relaxed);
  Cell* cell = nullptr;
  while (true) {
    cell = &cells_[pos % capacity_];
    const std::size_t seq = cell->sequence.load(std::memory_order_acquire);
    const auto diff = static_cast<std::ptrdiff_t>(seq) - static_cast<std::ptrdiff_t>(pos + 1);
    if (diff == 0) {
      if (dequeue_pos_.compare_exchange_weak(pos, pos + 1, std::memory_order_relaxed)) break;
    } else if (diff < 0) {
      return false;
    } else {
      pos = dequeue_pos_.load(std::memory_order_relaxed);
    }
  }
  out = std::move(cell->pending);
  cell->pending = {};
  cell->sequence.store(pos + capacity_, std::memory_order_release);
  return true;
}

void Executor::acquire_slot() {
  std::size_t spins = 0;
  std::size_t current = in_flight_.load(std::memory_order_acquire);
  while (true) {
    if (current < capacity_) {
      if (in_flight_.compare_exchange_weak(current, current + 1, std::memory_order_acq_rel)) {
        std::size_t peak = peak_in_flight_.load(std::memory_order_relaxed);
        while (peak < current + 1 &&
               !peak_in_flight_.compare_exchange_weak(peak, current + 1,
                                                      std::memory_order_relaxed)) {
        }
        return;
      }
      continue;
    }
    if (++spins < spin_limit_) {
      cpu_relax();
    } else {
      in_flight_.wait(current, std::memory_order_acquire);
    }
    current = in_flight_.load(std::memory_order_acquire);
  }
}

void Executor::release_slot() {
  in_flight_.fetch_sub(1, std::memory_order_acq_rel);
  in_flight_.notify_one();
}

JobTicket Executor::submit(Job job) {
  SubmitterGuard guard(submitters_);
  if (!accepting_.load(std::memory_order_seq_cst)) {
    throw LifecycleError("submit called after executor shutdown");
  }
  acquire_slot();
  Pending pending{std::move(job), std::make_shared<detail::Completion>()};
  const std::uint64_t id = next_job_id_.fetch_add(1, std::memory_order_relaxed);
  JobTicket ticket(id, pending.completion);
  // The slot count keeps the ring from filling, so this only spins while a
  // worker is between claiming and releasing a cell.
  while (!try_push(pending)) cpu_relax();
  epoch_.fetch_add(1, std::memory_order_release);
  epoch_.notify_one();
  return ticket;
}

void Executor::run(Pending& pending) {
  auto& done = *pending.completion;
  std::uint32_t state = detail::Completion::kCancelled;
  if (!cancel_.load(std::memory_order_acquire)) {
    try {
      done.result = handler_(pending.job);
      state = detail::Completion::kDone;
    } catch (...) {
      done.error = std::current_exception();
      state = detail::Completion::kFailed;
    }
  }
  done.state.store(state, std::memory_order_release);
  done.state.notify_all();
  pending = {};
  release_slot();
}

void Executor::worker_loop() {
  Pending pending;
  while (true) {
    if (try_pop(pending)) {
      run(pending);
      continue;
    }
    bool found = false;
    for (std::size_t i = 0; i < spin_limit_ && !found; ++i) {
      cpu_relax();
      found = try_pop(pending);
    }
    if (found) {
      run(pending);
      continue;
    }
    const std::uint32_t seen = epoch_.load(std::memory_order_acquire);
    if (try_pop(pending)) {
      run(pending);
      continue;
    }
    if (stopping_.load(std::memory_order_acquire)) {
      // No submitter is active once stopping is set; drain what is left.
      while (try_pop(pending)) run(pending);
      return;
    }
    epoch_.wait(seen, std::memory_order_acquire);
  }
}

TopKResult Executor::await(JobTicket& ticket) {
  if (!ticket.valid()) throw ParameterError("await on an empty ticket");
  auto& done = *ticket.completion_;
  if (done.claimed.exchange(true, std::memory_order_acq_rel)) {
    throw LifecycleError("job " + std::to_string(ticket.job_id()) + " was already awaited");
  }
  std::uint32_t state = done.state.load(std::memory_order_acquire);
  for (std::size_t i = 0; state == detail::Completion::kPending && i < spin_limit_; ++i) {
    cpu_relax();
    state = done.state.load(std::memory_order_acquire);
  }
  while (state == detail::Completion::kPending) {
    done.state.wait(detail::Completion::kPending, std::memory_order_acquire);
    state = done.state.load(std::memory_order_acquire);
  }
  switch (state) {
    case detail::Completion::kDone:
      return std::move(done.result);
    case detail::Completion::kFailed:
      std::rethrow_exception(done.error);
    default:
      throw CancelledError("job " + std::to_string(ticket.job_id()) +
                           " was cancelled by executor shutdown");
  }
}

void Executor::shutdown(ShutdownMode mode) {
  if (joined_.exchange(true)) return;
  accepting_.store(false, std::memory_order_seq_cst);
  if (mode == ShutdownMode::kCancel) cancel_.store(true, std::memory_order_release);
  while (submitters_.load(std::memory_order_acquire) != 0) cpu_relax();
  stopping_.store(true, std::memory_order_release);
  epoch_.fetch_add(1, std::memory_order_release);
  epoch_.notify_all();
  for (auto& t : threads_) t.join();
}

std::vector<TopKResult> run_dispatch_per_batch(const JobHandler& handler, std::span<const Job> jobs,
                                               std::size_t batch_size, std::size_t workers) {
  if (batch_size == 0 || workers == 0) {
    throw ParameterError("batch size and worker count must be at least 1");
  }
  std::vector<TopKResult> results(jobs.size());
  std::vector<std::thread> threads;
  for (std::size_t begin = 0; begin < jobs.size(); begin += batch_size) {
    const std::size_t end = std::min(jobs.size(), begin + batch_size);
    const std::size_t n_threads = std::min(workers, end - begin);
    threads.clear();
    for (std::size_t t = 0; t < n_threads; ++t) {
      threads.emplace_back([&, t] {
        for (std::size_t i = begin + t; i < end; i += n_threads) results[i] = handler(jobs[i]);
      });
    }
    for (auto& th : threads) th.join();
  }
  return results;
}

JobHandler make_index_handler(const VecFlowIndex& index) {
  return [&index](const Job& job) {
    return index.search(job.query, job.labels, job.params, job.query_ordinal);
  };
}

}  // namespace vecflow
