#include "sonolab/parallel.hpp"

#include <cstdlib>
#include <string>

namespace sonolab {

std::size_t max_threads() {
  if (const char* env = std::getenv("SONOLAB_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace sonolab
