#include "scanalign/parallel.hpp"

namespace scanalign {

namespace {
std::atomic<unsigned> g_workers{0};
}

void set_worker_count(unsigned n) { g_workers = n; }

unsigned worker_count() {
  const unsigned n = g_workers;
  if (n) return n;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

}  // namespace scanalign
