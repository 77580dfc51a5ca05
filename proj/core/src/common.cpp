#include "flowlab/common.hpp"

#include <atomic>
#include <charconv>
#include <cstdio>
#include <functional>
#include <mutex>
#include <thread>

namespace flowlab {

std::string format_g17(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string format_vec(const Vec& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_g17(v[i]);
  }
  out += "]";
  return out;
}

namespace {
std::atomic<int> g_threads{1};
}

int default_thread_count() { return g_threads.load(); }

void set_default_thread_count(int n) { g_threads.store(n < 1 ? 1 : n); }

void parallel_for(long n, int n_threads, const std::function<void(long)>& fn) {
  if (n <= 0) return;
  if (n_threads < 1) n_threads = 1;
  if (n_threads == 1 || n < 256) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next_chunk{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mu;
  const long chunk = 256;
  const long n_chunks = (n + chunk - 1) / chunk;
  auto worker = [&]() {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      const long c = next_chunk.fetch_add(1);
      if (c >= n_chunks) return;
      const long lo = c * chunk;
      const long hi = std::min(n, lo + chunk);
      try {
        for (long i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(n_threads) - 1);
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace flowlab
