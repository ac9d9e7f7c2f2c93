#include "bort/threads.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>

extern "C" void openblas_set_num_threads(int);

namespace bort {
namespace {

std::atomic<int> g_cap{0};
std::once_flag g_blas_once;

int initial_cap() {
  if (const char* env = std::getenv("BORT_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

bool has_avx512_core() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx512f") && __builtin_cpu_supports("avx512dq") &&
         __builtin_cpu_supports("avx512bw") && __builtin_cpu_supports("avx512vl");
#else
  return false;
#endif
}

}  // namespace

void set_thread_cap(int n) {
  if (n < 1) n = 1;
  g_cap.store(n);
  openblas_set_num_threads(n);
}

int thread_cap() {
  int c = g_cap.load();
  if (c == 0) {
    c = initial_cap();
    g_cap.store(c);
  }
  return c;
}

void configure_blas() {
  std::call_once(g_blas_once, [] {
    // OpenBLAS falls back to generic kernels when the CPU model string is
    // masked (common inside VMs); on AVX-512 hardware that costs ~5x. The
    // core type can only be chosen through the environment before the
    // library initializes, hence the setenv here. An explicit
    // OPENBLAS_CORETYPE always wins.
    if (!std::getenv("OPENBLAS_CORETYPE") && has_avx512_core()) {
      setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 0);
    }
    openblas_set_num_threads(thread_cap());
  });
}

}  // namespace bort
