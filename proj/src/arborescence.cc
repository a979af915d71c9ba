#include "parsel/arborescence.h"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace parsel {

namespace {

// Score with an additive tie key. The pair forms an ordered group, so the
// contraction arithmetic of Chu-Liu/Edmonds stays valid and the solver
// maximizes (weight, tie) lexicographically.
struct PairScore {
  double w = 0;
  double tie = 0;

  PairScore operator+(const PairScore& o) const { return {w + o.w, tie + o.tie}; }
  PairScore operator-(const PairScore& o) const { return {w - o.w, tie - o.tie}; }
  bool operator>(const PairScore& o) const {
    if (w != o.w) return w > o.w;
    return tie > o.tie;
  }
};

// key(h, d) = -h * (n+2)^(n-d); a base-(n+2) positional encoding of the head
// vector, so totals are injective over head vectors and larger key means
// lexicographically smaller heads. Exact in double only while the powers fit
// in the 53-bit mantissa.
constexpr int kExactTieLimit = 13;

double tie_key(int h, int d, int n) {
  if (n > kExactTieLimit) return 0.0;
  uint64_t p = 1;
  for (int i = 0; i < n - d; ++i) p *= static_cast<uint64_t>(n + 2);
  return -static_cast<double>(h) * static_cast<double>(p);
}

struct Solver {
  int n;  // nodes 0..n, 0 is the root
  std::vector<bool> disabled;
  std::vector<std::vector<int>> cand_head;
  std::vector<std::vector<PairScore>> cand_score;
  std::vector<int> heads;

  PairScore run() {
    std::vector<PairScore> best_score(n + 1);
    // Best incoming arc per active node.
    for (int m = 1; m <= n; ++m) {
      if (disabled[m]) continue;
      int best = -1;
      for (size_t k = 0; k < cand_head[m].size(); ++k) {
        if (best < 0 || cand_score[m][k] > cand_score[m][best]) best = static_cast<int>(k);
      }
      if (best < 0) throw std::runtime_error("max_arborescence: no spanning arborescence");
      heads[m] = cand_head[m][best];
      best_score[m] = cand_score[m][best];
    }

    // Cycle detection over the chosen arcs.
    std::vector<int> cycle;
    std::vector<int> visited(n + 1, 0);
    for (int m = 1; m <= n; ++m) {
      if (disabled[m]) continue;
      int h = m;
      while (h != 0) {
        if (visited[h]) break;
        visited[h] = m;
        h = heads[h];
      }
      if (h != 0 && visited[h] == m) {
        int c = h;
        do {
          cycle.push_back(c);
          c = heads[c];
        } while (c != h);
        break;
      }
    }

    if (cycle.empty()) {
      PairScore total;
      for (int m = 1; m <= n; ++m)
        if (!disabled[m]) total = total + best_score[m];
      return total;
    }

    // Contract the cycle into a representative node.
    std::vector<bool> in_cycle(n + 1, false);
    PairScore cycle_score;
    int rep = cycle[0];
    for (int c : cycle) {
      in_cycle[c] = true;
      cycle_score = cycle_score + best_score[c];
      if (c != rep) disabled[c] = true;
    }

    // Arcs leaving the cycle: keep the best member arc per outside node.
    std::vector<int> best_head_from_cycle(n + 1, -1);
    for (int m = 1; m <= n; ++m) {
      if (disabled[m] || m == rep) continue;
      int best = -1;
      for (size_t k = 0; k < cand_head[m].size(); ++k) {
        if (!in_cycle[cand_head[m][k]]) continue;
        if (best < 0 || cand_score[m][k] > cand_score[m][best]) best = static_cast<int>(k);
      }
      if (best < 0) continue;
      best_head_from_cycle[m] = cand_head[m][best];
      PairScore s = cand_score[m][best];
      size_t l = 0;
      for (size_t k = 0; k < cand_head[m].size(); ++k) {
        if (!in_cycle[cand_head[m][k]]) {
          cand_head[m][l] = cand_head[m][k];
          cand_score[m][l] = cand_score[m][k];
          ++l;
        }
      }
      cand_head[m].resize(l);
      cand_score[m].resize(l);
      cand_head[m].push_back(rep);
      cand_score[m].push_back(s);
    }

    // Arcs entering the cycle: per outside head keep the member whose swap
    // cost is best; entering through member c forfeits c's in-cycle arc.
    std::vector<int> enter_member(n + 1, -1);
    std::vector<PairScore> enter_score(n + 1);
    for (int c : cycle) {
      for (size_t k = 0; k < cand_head[c].size(); ++k) {
        int h = cand_head[c][k];
        if (in_cycle[h]) continue;
        PairScore s = cand_score[c][k] - best_score[c];
        if (enter_member[h] < 0 || s > enter_score[h]) {
          enter_member[h] = c;
          enter_score[h] = s;
        }
      }
    }
    std::vector<int> rep_head;
    std::vector<PairScore> rep_score;
    for (int h = 0; h <= n; ++h) {
      if (enter_member[h] < 0) continue;
      rep_head.push_back(h);
      rep_score.push_back(enter_score[h] + cycle_score);
    }
    int rep_cycle_head = heads[rep];
    cand_head[rep] = std::move(rep_head);
    cand_score[rep] = std::move(rep_score);

    PairScore total = run();

    // Expand: the representative's chosen head decides which member the
    // entering arc attaches to; the rest keep their in-cycle heads.
    int h_star = heads[rep];
    heads[rep] = rep_cycle_head;
    heads[enter_member[h_star]] = h_star;
    for (int m = 1; m <= n; ++m) {
      if (disabled[m]) continue;
      if (m != rep && heads[m] == rep && best_head_from_cycle[m] >= 0)
        heads[m] = best_head_from_cycle[m];
    }
    for (int c : cycle) disabled[c] = false;
    return total;
  }
};

}  // namespace

std::vector<int> max_arborescence(const std::vector<std::vector<double>>& score,
                                  double* total) {
  const int n = static_cast<int>(score.size()) - 1;
  if (n < 1) throw std::runtime_error("max_arborescence: empty graph");
  for (const auto& row : score) {
    if (row.size() != score.size())
      throw std::runtime_error("max_arborescence: score grid is not square");
  }

  Solver s;
  s.n = n;
  s.disabled.assign(n + 1, false);
  s.cand_head.resize(n + 1);
  s.cand_score.resize(n + 1);
  s.heads.assign(n + 1, 0);
  for (int d = 1; d <= n; ++d) {
    for (int h = 0; h <= n; ++h) {
      if (h == d) continue;
      double w = score[h][d];
      if (w == kNoArc) continue;
      s.cand_head[d].push_back(h);
      s.cand_score[d].push_back({w, tie_key(h, d, n)});
    }
  }
  PairScore t = s.run();
  if (total) *total = t.w;
  return std::vector<int>(s.heads.begin() + 1, s.heads.end());
}

}  // namespace parsel
