#pragma once

namespace bort {

/// Caps BLAS-internal parallelism. 1 selects verification mode (bitwise
/// deterministic trajectories). Call before heavy work; safe to call again.
void set_thread_cap(int n);

/// Current cap. Initialized from the BORT_THREADS environment variable,
/// falling back to the hardware thread count.
int thread_cap();

/// Applies the cap and BLAS runtime configuration. Invoked lazily by the
/// matmul wrappers; mains may call it eagerly.
void configure_blas();

}  // namespace bort
