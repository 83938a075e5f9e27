#ifndef RRM_PARALLEL_HPP
#define RRM_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rrm {

/// Runs fn(i) for i in [0, count) on at most `concurrency` threads
/// (the caller included). Results must be written by index; when several
/// items throw, the exception of the lowest index is rethrown so failures
/// are reported identically under any schedule.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t concurrency, Fn&& fn) {
  if (count == 0) return;
  std::size_t workers = std::clamp<std::size_t>(concurrency, 1, count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(drain);
    drain();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Counting permit gate; holders of a Permit never exceed the limit.
class PermitGate {
 public:
  explicit PermitGate(std::size_t limit) : limit_(std::max<std::size_t>(limit, 1)) {}

  class Permit {
   public:
    explicit Permit(PermitGate& gate) : gate_(&gate) { gate_->acquire(); }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    ~Permit() { gate_->release(); }

   private:
    PermitGate* gate_;
  };

  std::size_t peak() const {
    std::lock_guard lock(mu_);
    return peak_;
  }

 private:
  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_use_ < limit_; });
    ++in_use_;
    peak_ = std::max(peak_, in_use_);
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      --in_use_;
    }
    cv_.notify_one();
  }

  std::size_t limit_;
  std::size_t in_use_ = 0;
  std::size_t peak_ = 0;
  mutable std::mutex mu_;
  std::condition_variable cv_;
};

}  // namespace rrm

#endif  // RRM_PARALLEL_HPP
