#pragma once

#include <cstddef>
#include <functional>

namespace gp4nldr {

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware concurrency).
/// Each index is processed exactly once; results must not depend on scheduling.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

[[nodiscard]] std::size_t resolve_thread_count(std::size_t requested) noexcept;

} // namespace gp4nldr
