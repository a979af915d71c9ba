#ifndef PARSEL_ARBORESCENCE_H
#define PARSEL_ARBORESCENCE_H

#include <limits>
#include <vector>

namespace parsel {

constexpr double kNoArc = -std::numeric_limits<double>::infinity();

// Maximum-weight spanning arborescence rooted at node 0 (Chu-Liu/Edmonds).
//
// `score[h][d]` holds the weight of arc h -> d for h in 0..n, d in 1..n;
// absent arcs are kNoArc. Returns heads[d-1] for d in 1..n. Multiple arcs
// out of the root are permitted.
//
// Tie-break: among maximum-weight arborescences the one with the
// lexicographically smallest head vector (position 1 first, lower head
// preferred) is returned. The tie key is exact for n <= 13 provided equal
// totals are exact in double arithmetic; for longer sentences ties still
// resolve deterministically but the lexicographic guarantee lapses.
//
// Throws std::runtime_error if no spanning arborescence exists.
std::vector<int> max_arborescence(const std::vector<std::vector<double>>& score,
                                  double* total = nullptr);

}  // namespace parsel

#endif
