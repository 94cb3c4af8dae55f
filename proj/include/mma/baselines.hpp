#pragma once

#include "mma/exec.hpp"

namespace mma::baselines {

/// Customers in arrival order each take the nearest free vehicle (ties by vehicle id).
exec::Assignment fcfs_match(const exec::MatchPool& pool, const exec::Priority& g = exec::identity_priority);

/// Min-cost assignment with rank-weighted pickup distance, smaller side fully matched.
exec::Assignment batch_match(const exec::MatchPool& pool, const exec::Priority& g = exec::identity_priority);

}  // namespace mma::baselines
