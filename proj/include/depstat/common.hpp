#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace depstat {

// Error taxonomy shared by every module. The CLI maps ArgumentError,
// DomainError and ConfigError to exit code 2.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ArgumentError(what);
}

// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

// Seed for (stream, replication) under a master seed. Independent of the
// order in which streams are requested and of the thread count.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t replication = 0);

// Worker count used by parallel_for; 0 means hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs body(i) for i in [0, n). Each index writes only its own output slot,
// so results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// Compensated (Neumaier) summation.
class NeumaierSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      c_ += (sum_ - t) + x;
    else
      c_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

inline constexpr double kPi = 3.14159265358979323846264338327950288;

}  // namespace depstat
