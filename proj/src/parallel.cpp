#include "loggas/parallel.hpp"

#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace loggas {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LOGGAS_WORKERS")) {
    try {
      int w = std::stoi(env);
      if (w > 0) return w;
    } catch (...) {
    }
  }
  return 1;
}

void parallel_blocks(int workers, std::size_t count, const std::function<void(std::size_t)>& task) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t b = 0; b < count; ++b) task(b);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const auto w = static_cast<std::size_t>(workers);
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t b = t; b < count; b += w) task(b);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace loggas
