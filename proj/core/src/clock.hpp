#pragma once

#include <chrono>

#include "dcopt/solvers.hpp"

namespace dcopt::detail {

class Stopwatch {
 public:
  using Clock = std::chrono::steady_clock;

  Stopwatch() : start_(Clock::now()) {}

  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

 private:
  Clock::time_point start_;
};

// Wall-clock deadline derived from a budget; never expires unless time-limited.
class Deadline {
 public:
  explicit Deadline(const SolveBudget& budget) : limited_(budget.mode == BudgetMode::kTimeLimited),
                                                 seconds_(budget.seconds) {}

  bool expired() const { return limited_ && watch_.elapsed() >= seconds_; }
  double elapsed() const { return watch_.elapsed(); }

 private:
  Stopwatch watch_;
  bool limited_;
  double seconds_;
};

}  // namespace dcopt::detail
