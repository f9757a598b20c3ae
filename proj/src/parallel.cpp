#include "surgiatm/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <thread>
#include <vector>

namespace surgiatm {

int default_workers() {
  const char* env = std::getenv("SURGIATM_WORKERS");
  if (env == nullptr) return 1;
  int value = 0;
  const char* end = env + std::strlen(env);
  auto [ptr, ec] = std::from_chars(env, end, value);
  if (ec != std::errc() || ptr != end || value < 1) return 1;
  return value;
}

void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (count == 0) return;
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count);
  if (n == 1) {
    body(0, count);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  threads.reserve(n);
  const std::size_t chunk = count / n;
  const std::size_t extra = count % n;
  std::size_t begin = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t end = begin + chunk + (t < extra ? 1 : 0);
    threads.emplace_back([&, t, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
    begin = end;
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace surgiatm
