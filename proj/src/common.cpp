#include "depstat/common.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace depstat {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t replication) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ stream);
  return splitmix64(s ^ (replication * 0xd1b54a32d192ed03ULL));
}

namespace {
std::atomic<unsigned> g_threads{1};
}

void set_thread_count(unsigned n) {
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  g_threads = n;
}

unsigned thread_count() { return g_threads; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  unsigned workers = static_cast<unsigned>(std::min<std::size_t>(g_threads, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto run = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace depstat
