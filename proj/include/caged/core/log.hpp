#pragma once

#include <iostream>
#include <sstream>

namespace caged::log {

// 0 = quiet, 1 = info (default), 2 = debug. Read from CAGED_VERBOSITY once.
int verbosity();
void set_verbosity(int level);

template <class... Args>
void info(const Args&... args) {
  if (verbosity() < 1) return;
  std::ostringstream os;
  (os << ... << args);
  std::clog << "[caged] " << os.str() << '\n';
}

template <class... Args>
void debug(const Args&... args) {
  if (verbosity() < 2) return;
  std::ostringstream os;
  (os << ... << args);
  std::clog << "[caged:debug] " << os.str() << '\n';
}

}  // namespace caged::log
