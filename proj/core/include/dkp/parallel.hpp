#ifndef DKP_PARALLEL_HPP
#define DKP_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace dkp {

// Thread cap: min(DKP_THREADS, hardware_concurrency), at least 1.
int thread_count();
void set_thread_count(int n);  // 0 restores the environment default

// Runs f(begin, end) over disjoint chunks of [0, n). Chunk boundaries are
// fixed (independent of the thread count) so per-chunk reductions combine in
// a deterministic order.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& f);

// Deterministic max-reduction over [0, n): value(i) is evaluated once per i;
// ties resolve to the smallest index.
struct ArgMax {
  double value;
  std::size_t index;
};
ArgMax parallel_argmax(std::size_t n, const std::function<double(std::size_t)>& value);

}  // namespace dkp

#endif
