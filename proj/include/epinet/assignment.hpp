#pragma once

#include <vector>

#include "epinet/matrix.hpp"

namespace epinet {

// Exact minimum-cost linear assignment on a square cost matrix (shortest
// augmenting paths with potentials, O(n^3)); entries may be negative.
// Returns row -> column.
std::vector<int> solve_assignment(const Matrix& cost);

}  // namespace epinet
