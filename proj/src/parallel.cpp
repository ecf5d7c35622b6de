#include "pmp/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace pmp {

int worker_count() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("PARETO_MRMP_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap > 0) n = std::min(n, cap);
    } catch (const std::exception&) {
      // unparsable value: ignore the cap
    }
  }
  return n;
}

void parallel_chunks(std::size_t n, int workers,
                     const std::function<void(std::size_t, std::size_t, int)>& body) {
  workers = std::max(1, workers);
  if (workers == 1 || n < 2) {
    body(0, n, 0);
    return;
  }
  const auto w = static_cast<std::size_t>(workers);
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(w);
  for (std::size_t c = 0; c < w; ++c) {
    const std::size_t begin = n * c / w;
    const std::size_t end = n * (c + 1) / w;
    threads.emplace_back([&, begin, end, c] {
      try {
        body(begin, end, static_cast<int>(c));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace pmp
