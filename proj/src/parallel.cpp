#include "spde/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <string>

#include "spde/errors.hpp"

namespace spde {

std::size_t worker_count() {
  if (const char* env = std::getenv("SPDE_WORKERS"); env != nullptr && *env != '\0') {
    std::size_t n = 0;
    const std::string s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc() || ptr != s.data() + s.size() || n == 0) {
      throw ConfigError("SPDE_WORKERS: expected a positive integer, got \"" + s + "\"");
    }
    return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace spde
