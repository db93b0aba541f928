#include "caged/core/log.hpp"

#include <atomic>
#include <cstdlib>

namespace caged::log {
namespace {

int read_env() {
  const char* v = std::getenv("CAGED_VERBOSITY");
  if (v == nullptr || *v == '\0') return 1;
  return std::atoi(v);
}

std::atomic<int>& level() {
  static std::atomic<int> lvl{read_env()};
  return lvl;
}

}  // namespace

int verbosity() { return level().load(std::memory_order_relaxed); }
void set_verbosity(int lvl) { level().store(lvl, std::memory_order_relaxed); }

}  // namespace caged::log
