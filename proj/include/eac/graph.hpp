#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eac/rng.hpp"

namespace eac {

struct GraphEdge {
  std::uint32_t u = 0, v = 0;
  double w = 1.0;
};

// Undirected graph with positive edge weights, stored as symmetric CSR with
// neighbor lists sorted by vertex id. Parallel edges are coalesced by
// summing; self-loops are rejected.
class WeightedGraph {
 public:
  static WeightedGraph from_edges(std::size_t vertices,
                                  std::vector<GraphEdge> edges) {
    WeightedGraph g;
    g.v_ = vertices;
    for (const auto& e : edges) {
      if (e.u >= vertices || e.v >= vertices)
        throw std::invalid_argument("graph: endpoint out of range");
      if (e.u == e.v) throw std::invalid_argument("graph: self-loop");
      if (!(e.w > 0.0)) throw std::invalid_argument("graph: non-positive edge weight");
    }
    std::vector<GraphEdge> sym;
    sym.reserve(edges.size() * 2);
    for (const auto& e : edges) {
      sym.push_back(e);
      sym.push_back(GraphEdge{e.v, e.u, e.w});
    }
    std::sort(sym.begin(), sym.end(), [](const GraphEdge& a, const GraphEdge& b) {
      return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    g.xadj_.assign(vertices + 1, 0);
    for (std::size_t i = 0; i < sym.size();) {
      std::size_t j = i;
      double w = 0.0;
      while (j < sym.size() && sym[j].u == sym[i].u && sym[j].v == sym[i].v)
        w += sym[j++].w;
      g.adj_.push_back(sym[i].v);
      g.ew_.push_back(w);
      ++g.xadj_[sym[i].u + 1];
      i = j;
    }
    for (std::size_t v = 0; v < vertices; ++v) g.xadj_[v + 1] += g.xadj_[v];
    return g;
  }

  // Text format: "V E" on the first line, then E lines "u v w" (w may be any
  // positive real). Blank lines and lines starting with '#' are ignored.
  static WeightedGraph parse_edge_list(std::istream& in) {
    std::string line;
    auto next_line = [&](std::string& out) {
      while (std::getline(in, out)) {
        if (!out.empty() && out.back() == '\r') out.pop_back();
        std::size_t pos = out.find_first_not_of(" \t");
        if (pos == std::string::npos || out[pos] == '#') continue;
        return true;
      }
      return false;
    };
    if (!next_line(line)) throw std::runtime_error("edge list: missing header");
    std::istringstream head(line);
    std::size_t vertices = 0, count = 0;
    if (!(head >> vertices >> count))
      throw std::runtime_error("edge list: header must be 'V E'");
    std::vector<GraphEdge> edges;
    edges.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      if (!next_line(line))
        throw std::runtime_error("edge list: expected " + std::to_string(count) +
                                 " edges, got " + std::to_string(i));
      std::istringstream row(line);
      GraphEdge e;
      if (!(row >> e.u >> e.v >> e.w))
        throw std::runtime_error("edge list: bad edge line: '" + line + "'");
      edges.push_back(e);
    }
    return from_edges(vertices, std::move(edges));
  }

  std::size_t vertices() const { return v_; }
  std::size_t degree(std::uint32_t v) const { return xadj_[v + 1] - xadj_[v]; }

  struct NeighborRange {
    const std::uint32_t* adj;
    const double* ew;
    std::size_t count;
  };
  NeighborRange neighbors(std::uint32_t v) const {
    return {adj_.data() + xadj_[v], ew_.data() + xadj_[v], xadj_[v + 1] - xadj_[v]};
  }

  double weighted_degree(std::uint32_t v) const {
    double s = 0.0;
    for (std::size_t e = xadj_[v]; e < xadj_[v + 1]; ++e) s += ew_[e];
    return s;
  }

 private:
  std::size_t v_ = 0;
  std::vector<std::size_t> xadj_;
  std::vector<std::uint32_t> adj_;
  std::vector<double> ew_;
};

struct PartitionResult {
  std::vector<std::uint32_t> part;  // part id per vertex, all k parts non-empty
  std::uint32_t k = 0;
  double edge_cut = 0.0;  // total weight of edges crossing parts
  double balance = 0.0;   // max part size / ceil(V / k)
};

namespace detail {

struct CoarseLevel {
  WeightedGraph graph;
  std::vector<std::uint32_t> vweight;  // fine-vertex count per vertex
  std::vector<std::uint32_t> map;      // finer vertex -> this level's vertex
};

// Heavy-edge matching contraction. Pairs whose combined weight would exceed
// weight_limit stay unmatched so balance remains achievable later.
inline bool coarsen_step(const WeightedGraph& g,
                         const std::vector<std::uint32_t>& vw,
                         std::uint32_t weight_limit, Rng& rng, CoarseLevel& out) {
  const std::size_t n = g.vertices();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<std::uint32_t> mate(n, std::numeric_limits<std::uint32_t>::max());
  for (std::uint32_t u : order) {
    if (mate[u] != std::numeric_limits<std::uint32_t>::max()) continue;
    auto nb = g.neighbors(u);
    std::uint32_t pick = std::numeric_limits<std::uint32_t>::max();
    double best = -1.0;
    for (std::size_t e = 0; e < nb.count; ++e) {
      const std::uint32_t v = nb.adj[e];
      if (mate[v] != std::numeric_limits<std::uint32_t>::max()) continue;
      if (vw[u] + vw[v] > weight_limit) continue;
      if (nb.ew[e] > best || (nb.ew[e] == best && v < pick)) {
        best = nb.ew[e];
        pick = v;
      }
    }
    if (pick != std::numeric_limits<std::uint32_t>::max()) {
      mate[u] = pick;
      mate[pick] = u;
    } else {
      mate[u] = u;
    }
  }
  // Group ids in order of the lower endpoint, for determinism.
  out.map.assign(n, std::numeric_limits<std::uint32_t>::max());
  std::uint32_t groups = 0;
  for (std::uint32_t u = 0; u < n; ++u) {
    if (out.map[u] != std::numeric_limits<std::uint32_t>::max()) continue;
    out.map[u] = groups;
    if (mate[u] != u) out.map[mate[u]] = groups;
    ++groups;
  }
  if (groups == n) return false;  // nothing contracted
  out.vweight.assign(groups, 0);
  for (std::uint32_t u = 0; u < n; ++u) out.vweight[out.map[u]] += vw[u];
  std::vector<GraphEdge> edges;
  for (std::uint32_t u = 0; u < n; ++u) {
    auto nb = g.neighbors(u);
    for (std::size_t e = 0; e < nb.count; ++e) {
      const std::uint32_t v = nb.adj[e];
      if (v <= u) continue;
      const std::uint32_t cu = out.map[u], cv = out.map[v];
      if (cu == cv) continue;
      edges.push_back(GraphEdge{cu, cv, nb.ew[e]});
    }
  }
  out.graph = WeightedGraph::from_edges(groups, std::move(edges));
  return true;
}

// Sequential region growing: each part in turn grows around a peripheral
// seed to its balanced share of the remaining weight, adding the unassigned
// vertex best connected to the growing part. Growing one part at a time
// keeps parts contiguous whenever the graph allows it; interleaved growth
// tends to comb sparse graphs into alternating fragments.
inline std::vector<std::uint32_t> initial_partition(const WeightedGraph& g,
                                                    const std::vector<std::uint32_t>& vw,
                                                    std::uint32_t k,
                                                    std::uint32_t cap) {
  const std::size_t n = g.vertices();
  const auto unset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> part(n, unset);
  std::vector<std::uint64_t> load(k, 0);
  std::vector<double> to_assigned(n, 0.0);  // connectivity to any placed vertex
  std::vector<double> to_current(n, 0.0);   // connectivity to the growing part
  std::uint64_t rem = 0;
  for (std::uint32_t w : vw) rem += w;
  std::size_t unassigned = n;

  auto place = [&](std::uint32_t v, std::uint32_t q) {
    part[v] = q;
    load[q] += vw[v];
    rem -= vw[v];
    --unassigned;
    auto nb = g.neighbors(v);
    for (std::size_t e = 0; e < nb.count; ++e) {
      to_assigned[nb.adj[e]] += nb.ew[e];
      to_current[nb.adj[e]] += nb.ew[e];
    }
  };

  for (std::uint32_t q = 0; q < k; ++q) {
    std::fill(to_current.begin(), to_current.end(), 0.0);
    const std::uint64_t target = rem / (k - q);
    std::uint32_t seed = unset;
    if (q == 0) {
      // Densest vertex first; later seeds are peripheral to what is placed.
      double best = -1.0;
      for (std::uint32_t v = 0; v < n; ++v)
        if (g.weighted_degree(v) > best) {
          best = g.weighted_degree(v);
          seed = v;
        }
    } else {
      double least = std::numeric_limits<double>::infinity();
      for (std::uint32_t v = 0; v < n; ++v)
        if (part[v] == unset && to_assigned[v] < least) {
          least = to_assigned[v];
          seed = v;
        }
    }
    place(seed, q);
    // Leave one vertex per part still to be seeded.
    while (load[q] < target && unassigned > k - 1 - q) {
      std::uint32_t pick = unset;
      double gain = -1.0;
      for (std::uint32_t v = 0; v < n; ++v) {
        if (part[v] != unset || load[q] + vw[v] > cap) continue;
        if (to_current[v] > gain) {
          gain = to_current[v];
          pick = v;
        }
      }
      if (pick == unset) break;  // nothing fits under the cap
      place(pick, q);
    }
  }
  // Cap-bound leftovers go to the lightest part that still fits, or failing
  // that the lightest overall; overload repair in refine() settles the rest.
  for (std::uint32_t v = 0; v < n; ++v) {
    if (part[v] != unset) continue;
    std::uint32_t fit = k, any = 0;
    for (std::uint32_t q = 0; q < k; ++q) {
      if (load[q] < load[any]) any = q;
      if (load[q] + vw[v] <= cap && (fit == k || load[q] < load[fit])) fit = q;
    }
    const std::uint32_t q = fit < k ? fit : any;
    part[v] = q;
    load[q] += vw[v];
  }
  return part;
}

// Weight of the edge between u and v, or 0 when absent.
inline double edge_between(const WeightedGraph& g, std::uint32_t u, std::uint32_t v) {
  auto nb = g.neighbors(u);
  const auto* pos = std::lower_bound(nb.adj, nb.adj + nb.count, v);
  if (pos == nb.adj + nb.count || *pos != v) return 0.0;
  return nb.ew[pos - nb.adj];
}

// One round of cap-neutral exchanges: for every part pair, swap the two
// equal-weight vertices whose exchange cuts the most, considering the
// candidates most attracted to the other side. Swaps recover the moves a
// tight cap forbids one vertex at a time.
inline bool swap_pass(const WeightedGraph& g, const std::vector<std::uint32_t>& vw,
                      std::uint32_t k, std::vector<std::uint32_t>& part,
                      std::vector<double>& conn) {
  const std::size_t n = g.vertices();
  std::fill(conn.begin(), conn.end(), 0.0);
  for (std::uint32_t v = 0; v < n; ++v) {
    auto nb = g.neighbors(v);
    for (std::size_t e = 0; e < nb.count; ++e)
      conn[v * k + part[nb.adj[e]]] += nb.ew[e];
  }
  constexpr std::size_t kCandidates = 48;
  bool any = false;
  std::vector<std::uint32_t> ca, cb;
  auto gather = [&](std::uint32_t from, std::uint32_t to,
                    std::vector<std::uint32_t>& out) {
    out.clear();
    for (std::uint32_t v = 0; v < n; ++v)
      if (part[v] == from) out.push_back(v);
    const std::size_t keep = std::min(kCandidates, out.size());
    std::partial_sort(out.begin(), out.begin() + keep, out.end(),
                      [&](std::uint32_t x, std::uint32_t y) {
                        const double gx = conn[x * k + to] - conn[x * k + from];
                        const double gy = conn[y * k + to] - conn[y * k + from];
                        if (gx != gy) return gx > gy;
                        return x < y;
                      });
    out.resize(keep);
  };
  auto shift = [&](std::uint32_t v, std::uint32_t from, std::uint32_t to) {
    part[v] = to;
    auto nb = g.neighbors(v);
    for (std::size_t e = 0; e < nb.count; ++e) {
      conn[nb.adj[e] * k + from] -= nb.ew[e];
      conn[nb.adj[e] * k + to] += nb.ew[e];
    }
  };
  for (std::uint32_t a = 0; a + 1 < k; ++a)
    for (std::uint32_t b = a + 1; b < k; ++b) {
      gather(a, b, ca);
      gather(b, a, cb);
      double best = 1e-12;
      std::uint32_t bu = 0, bv = 0;
      bool found = false;
      for (std::uint32_t u : ca)
        for (std::uint32_t v : cb) {
          if (vw[u] != vw[v]) continue;  // loads must stay put
          const double gain = (conn[u * k + b] - conn[u * k + a]) +
                              (conn[v * k + a] - conn[v * k + b]) -
                              2.0 * edge_between(g, u, v);
          if (gain > best || (gain == best && found && (u < bu || (u == bu && v < bv)))) {
            best = gain;
            bu = u;
            bv = v;
            found = true;
          }
        }
      if (found) {
        shift(bu, a, b);
        shift(bv, b, a);
        any = true;
      }
    }
  return any;
}

// Boundary refinement passes: greedily move vertices whose connectivity to
// another part beats their own, under the cap and without emptying a part.
inline void refine(const WeightedGraph& g, const std::vector<std::uint32_t>& vw,
                   std::uint32_t k, std::uint32_t cap,
                   std::vector<std::uint32_t>& part) {
  const std::size_t n = g.vertices();
  std::vector<std::uint64_t> load(k, 0);
  std::vector<std::uint32_t> count(k, 0);
  for (std::uint32_t v = 0; v < n; ++v) {
    load[part[v]] += vw[v];
    ++count[part[v]];
  }
  std::vector<double> conn(k, 0.0);
  std::vector<double> vconn(n * k, 0.0);
  for (int pass = 0; pass < 8; ++pass) {
    bool moved = false;
    for (std::uint32_t v = 0; v < n; ++v) {
      const std::uint32_t cur = part[v];
      if (count[cur] <= 1) continue;
      std::fill(conn.begin(), conn.end(), 0.0);
      auto nb = g.neighbors(v);
      for (std::size_t e = 0; e < nb.count; ++e) conn[part[nb.adj[e]]] += nb.ew[e];
      std::uint32_t to = cur;
      double gain = 0.0;
      for (std::uint32_t q = 0; q < k; ++q) {
        if (q == cur || load[q] + vw[v] > cap) continue;
        const double gq = conn[q] - conn[cur];
        if (gq > gain || (gq == gain && to != cur && load[q] < load[to])) {
          gain = gq;
          to = q;
        }
      }
      if (to == cur) continue;
      load[cur] -= vw[v];
      --count[cur];
      load[to] += vw[v];
      ++count[to];
      part[v] = to;
      moved = true;
    }
    // Swaps keep loads and counts intact, so the bookkeeping above survives.
    const bool swapped = swap_pass(g, vw, k, part, vconn);
    if (!moved && !swapped) break;
  }
  // Overload repair: while some part exceeds the cap, move its cheapest
  // boundary vertex into the lightest part that fits.
  for (;;) {
    std::uint32_t over = k;
    for (std::uint32_t q = 0; q < k; ++q)
      if (load[q] > cap && (over == k || load[q] > load[over])) over = q;
    if (over == k) break;
    std::uint32_t take = std::numeric_limits<std::uint32_t>::max();
    std::uint32_t dest = k;
    double best_loss = std::numeric_limits<double>::infinity();
    for (std::uint32_t v = 0; v < n; ++v) {
      if (part[v] != over || count[over] <= 1) continue;
      std::fill(conn.begin(), conn.end(), 0.0);
      auto nb = g.neighbors(v);
      for (std::size_t e = 0; e < nb.count; ++e) conn[part[nb.adj[e]]] += nb.ew[e];
      for (std::uint32_t q = 0; q < k; ++q) {
        if (q == over || load[q] + vw[v] > cap) continue;
        const double loss = conn[over] - conn[q];
        if (loss < best_loss) {
          best_loss = loss;
          take = v;
          dest = q;
        }
      }
    }
    if (take == std::numeric_limits<std::uint32_t>::max()) break;  // stuck
    load[over] -= vw[take];
    --count[over];
    load[dest] += vw[take];
    ++count[dest];
    part[take] = dest;
  }
}

}  // namespace detail

// Multilevel k-way partition under a hard size cap of
// floor(balance_factor * ceil(V / k)) fine vertices per part. Deterministic
// for a fixed (graph, k, balance_factor, seed).
inline PartitionResult partition_graph(const WeightedGraph& g, std::uint32_t k,
                                       double balance_factor = 1.1,
                                       std::uint64_t seed = 0) {
  const std::size_t n = g.vertices();
  if (k < 1) throw std::invalid_argument("partition_graph: k must be positive");
  if (k > n)
    throw std::invalid_argument("partition_graph: k = " + std::to_string(k) +
                                " exceeds vertex count " + std::to_string(n));
  if (!(balance_factor >= 1.0))
    throw std::invalid_argument("partition_graph: balance_factor must be >= 1");

  const std::uint64_t ideal = (n + k - 1) / k;
  const std::uint32_t cap = static_cast<std::uint32_t>(
      std::max<std::uint64_t>(ideal, static_cast<std::uint64_t>(
                                         balance_factor * static_cast<double>(ideal))));

  Rng rng(seed_mix(seed, 0x9a));
  std::deque<detail::CoarseLevel> levels;  // deque: stable references on growth
  const WeightedGraph* cur = &g;
  std::vector<std::uint32_t> curw(n, 1);
  const std::size_t coarse_target = std::max<std::size_t>(4 * std::size_t{k}, 64);
  const std::uint32_t match_limit =
      static_cast<std::uint32_t>(std::max<std::uint64_t>(2, ideal / 2));
  while (cur->vertices() > coarse_target) {
    detail::CoarseLevel next;
    if (!detail::coarsen_step(*cur, curw, match_limit, rng, next)) break;
    if (next.graph.vertices() >
        static_cast<std::size_t>(0.95 * static_cast<double>(cur->vertices())))
      break;  // diminishing returns
    if (next.graph.vertices() < k) break;
    levels.push_back(std::move(next));
    cur = &levels.back().graph;
    curw = levels.back().vweight;
  }

  std::vector<std::uint32_t> part =
      detail::initial_partition(*cur, curw, k, cap);
  detail::refine(*cur, curw, k, cap, part);
  for (std::size_t l = levels.size(); l-- > 0;) {
    const auto& map = levels[l].map;
    const WeightedGraph& finer = l == 0 ? g : levels[l - 1].graph;
    const std::vector<std::uint32_t>* fw = nullptr;
    std::vector<std::uint32_t> unit;
    if (l == 0) {
      unit.assign(g.vertices(), 1);
      fw = &unit;
    } else {
      fw = &levels[l - 1].vweight;
    }
    std::vector<std::uint32_t> finer_part(finer.vertices());
    for (std::uint32_t v = 0; v < finer.vertices(); ++v)
      finer_part[v] = part[map[v]];
    part = std::move(finer_part);
    detail::refine(finer, *fw, k, cap, part);
  }

  // Isolated vertices carry no cut either way; spread them round-robin over
  // the lightest parts.
  {
    std::vector<std::uint64_t> load(k, 0);
    for (std::size_t v = 0; v < n; ++v) ++load[part[v]];
    for (std::uint32_t v = 0; v < n; ++v) {
      if (g.degree(v) != 0 || load[part[v]] <= 1) continue;
      std::uint32_t q = 0;
      for (std::uint32_t c = 1; c < k; ++c)
        if (load[c] < load[q]) q = c;
      if (q == part[v] || load[q] + 1 > cap) continue;
      --load[part[v]];
      ++load[q];
      part[v] = q;
    }
  }

  PartitionResult res;
  res.part = std::move(part);
  res.k = k;
  std::vector<std::uint64_t> sizes(k, 0);
  for (std::uint32_t v = 0; v < n; ++v) ++sizes[res.part[v]];
  for (std::uint32_t q = 0; q < k; ++q)
    if (sizes[q] == 0) throw std::logic_error("partition_graph: empty part");
  double cut = 0.0;
  for (std::uint32_t v = 0; v < n; ++v) {
    auto nb = g.neighbors(v);
    for (std::size_t e = 0; e < nb.count; ++e)
      if (nb.adj[e] > v && res.part[nb.adj[e]] != res.part[v]) cut += nb.ew[e];
  }
  res.edge_cut = cut;
  res.balance = static_cast<double>(*std::max_element(sizes.begin(), sizes.end())) /
                static_cast<double>(ideal);
  return res;
}

}  // namespace eac
