#pragma once

#include <cstddef>
#include <functional>

namespace geofair {

/// Runs fn(0) .. fn(n - 1) on up to `jobs` threads (jobs <= 1 runs inline,
/// in index order). Work items must write only to their own slots; the
/// first exception by index is rethrown after all threads join.
void parallel_for(std::size_t n, unsigned jobs,
                  const std::function<void(std::size_t)>& fn);

}  // namespace geofair
