#pragma once
// Dyadic Whitney decomposition of the ambient open set. A dyadic cube Q with
// center x_Q and side l is accepted when
//     sqrt(n) * l <= d_hat(x_Q) <= 5 * sqrt(n) * l,
// which via the 1-Lipschitz bound places the whole closed cube strictly
// inside the set. Cubes that would need side < min_side are discarded; the
// uncovered layer near the boundary is the truncation skin. The accepted set
// for side >= min_side does not depend on min_side, so refining min_side only
// adds cubes near the boundary.

#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>
#include <vector>

#include "divsolve/geometry.hpp"

namespace divsolve {

struct WhitneyCube {
  int index = -1;
  int generation = 0;
  std::array<int64_t, kMaxDim> ipos{0, 0, 0};
  Vec center;
  double side = 0;
  double dhat_center = 0;
};

namespace detail {
struct CubeKey {
  int gen = 0;
  std::array<int64_t, kMaxDim> ipos{0, 0, 0};
  bool operator==(const CubeKey& o) const { return gen == o.gen && ipos == o.ipos; }
};
struct CubeKeyHash {
  size_t operator()(const CubeKey& k) const {
    uint64_t h = 0x9e3779b97f4a7c15ull ^ uint64_t(k.gen);
    for (int i = 0; i < kMaxDim; ++i) {
      h ^= uint64_t(k.ipos[size_t(i)]) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return size_t(h);
  }
};
}  // namespace detail

class CubeComplex {
 public:
  std::vector<WhitneyCube> cubes;
  std::vector<std::vector<int>> adjacency;
  int root = -1;
  double min_side = 0;
  double root_side = 0;
  Vec origin;
  int dim = 2;
  int max_generation = 0;
  int graded_splits = 0;  // forced splits applied by the grading pass

  std::optional<int> locate(const Vec& y) const {
    for (int i = 0; i < dim; ++i) {
      const double rel = y[i] - origin[i];
      if (rel < 0 || rel >= root_side) return std::nullopt;
    }
    for (int g = 0; g <= max_generation; ++g) {
      const double side = root_side / double(int64_t(1) << g);
      detail::CubeKey key{g, {0, 0, 0}};
      for (int i = 0; i < dim; ++i)
        key.ipos[size_t(i)] = int64_t(std::floor((y[i] - origin[i]) / side));
      auto it = map_.find(key);
      if (it != map_.end()) return it->second;
    }
    return std::nullopt;
  }

  bool connected() const {
    if (cubes.empty()) return false;
    return reachable_count() == cubes.size();
  }

  size_t reachable_count() const {
    if (root < 0) return 0;
    std::vector<char> seen(cubes.size(), 0);
    std::deque<int> q{root};
    seen[size_t(root)] = 1;
    size_t n = 1;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (int v : adjacency[size_t(u)])
        if (!seen[size_t(v)]) {
          seen[size_t(v)] = 1;
          ++n;
          q.push_back(v);
        }
    }
    return n;
  }

  void rebuild_index() {
    map_.clear();
    map_.reserve(cubes.size() * 2);
    for (auto& c : cubes) {
      detail::CubeKey key{c.generation, c.ipos};
      map_.emplace(key, c.index);
    }
  }

  const std::unordered_map<detail::CubeKey, int, detail::CubeKeyHash>& index_map() const {
    return map_;
  }

 private:
  std::unordered_map<detail::CubeKey, int, detail::CubeKeyHash> map_;
};

namespace detail {

inline Vec cube_center(const Vec& origin, double root_side, int gen,
                       const std::array<int64_t, kMaxDim>& ipos, int dim) {
  const double side = root_side / double(int64_t(1) << gen);
  Vec c = Vec::zero(dim);
  for (int i = 0; i < dim; ++i)
    c[i] = origin[i] + (double(ipos[size_t(i)]) + 0.5) * side;
  return c;
}

inline void build_adjacency(CubeComplex& cx) {
  cx.rebuild_index();
  const auto& map = cx.index_map();
  std::vector<std::pair<int, int>> edges;
  const int dim = cx.dim;
  const int ndirs = dim == 2 ? 9 : 27;
  for (const auto& c : cx.cubes) {
    const int64_t span = int64_t(1) << c.generation;
    for (int d = 0; d < ndirs; ++d) {
      std::array<int64_t, kMaxDim> off{0, 0, 0};
      int t = d;
      bool self = true;
      for (int i = 0; i < dim; ++i) {
        off[size_t(i)] = int64_t(t % 3) - 1;
        if (off[size_t(i)] != 0) self = false;
        t /= 3;
      }
      if (self) continue;
      std::array<int64_t, kMaxDim> j{0, 0, 0};
      bool in_range = true;
      for (int i = 0; i < dim; ++i) {
        j[size_t(i)] = c.ipos[size_t(i)] + off[size_t(i)];
        if (j[size_t(i)] < 0 || j[size_t(i)] >= span) in_range = false;
      }
      if (!in_range) continue;
      // same generation slot, then coarser ancestors of that slot
      auto probe = j;
      for (int g = c.generation; g >= 0; --g) {
        auto it = map.find(CubeKey{g, probe});
        if (it != map.end()) {
          if (it->second != c.index)
            edges.emplace_back(std::min(c.index, it->second),
                               std::max(c.index, it->second));
          break;  // cubes are disjoint: nothing above an accepted ancestor
        }
        for (int i = 0; i < dim; ++i) probe[size_t(i)] >>= 1;
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  cx.adjacency.assign(cx.cubes.size(), {});
  for (auto& [a, b] : edges) {
    cx.adjacency[size_t(a)].push_back(b);
    cx.adjacency[size_t(b)].push_back(a);
  }
  for (auto& lst : cx.adjacency) std::sort(lst.begin(), lst.end());
}

}  // namespace detail

inline CubeComplex decompose(const DomainPair& pair, double min_side) {
  if (!(min_side > 0)) throw ConfigError("whitney.min_side must be positive");
  CubeComplex cx;
  cx.dim = pair.dim();
  cx.min_side = min_side;
  const double rootn = std::sqrt(double(cx.dim));

  Vec lo, hi;
  pair.cover.bbox(lo, hi);
  double extent = 0;
  for (int i = 0; i < cx.dim; ++i) extent = std::max(extent, hi[i] - lo[i]);
  cx.root_side = std::exp2(std::ceil(std::log2(extent * (1 + 1e-9))));
  cx.origin = Vec::zero(cx.dim);
  for (int i = 0; i < cx.dim; ++i)
    cx.origin[i] = 0.5 * (lo[i] + hi[i]) - 0.5 * cx.root_side;
  cx.max_generation =
      std::max(0, int(std::floor(std::log2(cx.root_side / min_side) + 1e-9)));

  struct Item {
    int gen = 0;
    std::array<int64_t, kMaxDim> ipos{0, 0, 0};  // unused lanes must stay zero
  };
  std::vector<Item> stack{{0, {0, 0, 0}}};
  while (!stack.empty()) {
    const Item it = stack.back();
    stack.pop_back();
    const double side = cx.root_side / double(int64_t(1) << it.gen);
    const Vec center = detail::cube_center(cx.origin, cx.root_side, it.gen, it.ipos, cx.dim);
    const double halfdiag = 0.5 * rootn * side;
    const double s = pair.cover.signed_distance(center);
    if (s > halfdiag) continue;  // cube entirely outside the ambient set
    const double d = pair.d_hat(center);
    if (d >= rootn * side && d <= 5.0 * rootn * side) {
      WhitneyCube q;
      q.index = int(cx.cubes.size());
      q.generation = it.gen;
      q.ipos = it.ipos;
      q.center = center;
      q.side = side;
      q.dhat_center = d;
      cx.cubes.push_back(q);
      continue;
    }
    if (0.5 * side < min_side) continue;  // truncation skin
    const int nchild = 1 << cx.dim;
    for (int k = nchild - 1; k >= 0; --k) {
      Item ch;
      ch.gen = it.gen + 1;
      for (int i = 0; i < cx.dim; ++i)
        ch.ipos[size_t(i)] = 2 * it.ipos[size_t(i)] + ((k >> i) & 1);
      stack.push_back(ch);
    }
  }

  detail::build_adjacency(cx);

  // Grading: force adjacent side ratios into {1/2, 1, 2} by splitting the
  // coarser cube of any steeper edge. The acceptance interval almost always
  // yields this on its own; the pass is a safeguard.
  for (;;) {
    std::vector<char> split(cx.cubes.size(), 0);
    bool any = false;
    for (const auto& c : cx.cubes)
      for (int v : cx.adjacency[size_t(c.index)])
        if (cx.cubes[size_t(v)].generation - c.generation >= 2) {
          split[size_t(c.index)] = 1;
          any = true;
        }
    if (!any) break;
    std::vector<WhitneyCube> next;
    next.reserve(cx.cubes.size() + 8);
    for (const auto& c : cx.cubes) {
      if (!split[size_t(c.index)]) {
        next.push_back(c);
        continue;
      }
      ++cx.graded_splits;
      const int nchild = 1 << cx.dim;
      for (int k = 0; k < nchild; ++k) {
        WhitneyCube q;
        q.generation = c.generation + 1;
        for (int i = 0; i < cx.dim; ++i)
          q.ipos[size_t(i)] = 2 * c.ipos[size_t(i)] + ((k >> i) & 1);
        q.center = detail::cube_center(cx.origin, cx.root_side, q.generation, q.ipos, cx.dim);
        q.side = 0.5 * c.side;
        q.dhat_center = pair.d_hat(q.center);
        next.push_back(q);
      }
    }
    for (size_t i = 0; i < next.size(); ++i) next[i].index = int(i);
    cx.cubes = std::move(next);
    cx.max_generation = std::max(cx.max_generation, [&] {
      int g = 0;
      for (const auto& c : cx.cubes) g = std::max(g, c.generation);
      return g;
    }());
    detail::build_adjacency(cx);
  }

  cx.rebuild_index();
  auto rt = cx.locate(pair.x0);
  if (!rt)
    throw RootNotCovered("base point is not covered by any accepted cube");
  cx.root = *rt;
  return cx;
}

inline bool component_check(const CubeComplex& cx) { return cx.connected(); }

}  // namespace divsolve
