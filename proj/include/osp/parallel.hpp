#pragma once

#include <cstddef>
#include <functional>

namespace osp {

/// Worker count used by parallel_for; 0 selects hardware concurrency.
/// Results of every library routine are independent of this setting.
void set_thread_count(unsigned threads);
unsigned thread_count();

/// Calls body(i) for i in [0, count), split into contiguous chunks across workers.
/// Callers write into per-index slots and reduce serially afterwards.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace osp
