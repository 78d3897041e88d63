#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace exhier {

// Runs body(r) for r in [0, count) on `jobs` threads in contiguous shards and
// merges the per-shard accumulators in shard order, so results do not depend on jobs.
template <class Acc>
Acc parallel_reduce(std::uint64_t count, unsigned jobs, const std::function<void(std::uint64_t, Acc&)>& body,
                    const std::function<void(Acc&, const Acc&)>& merge) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::uint64_t>(count, 1))));
  std::vector<Acc> acc(jobs);
  std::vector<std::exception_ptr> err(jobs);
  auto run = [&](unsigned s) {
    try {
      const std::uint64_t lo = count * s / jobs, hi = count * (s + 1) / jobs;
      for (std::uint64_t r = lo; r < hi; ++r) body(r, acc[s]);
    } catch (...) {
      err[s] = std::current_exception();
    }
  };
  if (jobs == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned s = 0; s < jobs; ++s) pool.emplace_back(run, s);
    for (auto& t : pool) t.join();
  }
  for (auto& e : err)
    if (e) std::rethrow_exception(e);
  Acc out{};
  for (const auto& a : acc) merge(out, a);
  return out;
}

inline unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace exhier
