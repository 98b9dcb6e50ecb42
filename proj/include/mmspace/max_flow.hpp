#pragma once

// Exact max-flow for bipartite transport problems: source -> left (capacity
// supply), left -> right on allowed edges (unbounded), right -> sink
// (capacity demand). Edmonds-Karp on the residual graph; the graphs here
// have at most a few hundred edges.

#include "mmspace/rational.hpp"

#include <cstddef>
#include <deque>
#include <limits>
#include <vector>

namespace mmspace {

template <class Scalar>
struct transport_flow {
  Scalar value{0};
  std::vector<std::vector<Scalar>> plan;  // plan[i][j] on allowed edges
};

/// `allowed(i, j)` selects the usable left/right pairs.
template <class Scalar, class Allowed>
transport_flow<Scalar> bipartite_max_flow(const std::vector<Scalar>& supply, const std::vector<Scalar>& demand,
                                          Allowed&& allowed, double tol = 1e-13) {
  using T = scalar_traits<Scalar>;
  const std::size_t n1 = supply.size(), n2 = demand.size();
  const std::size_t source = n1 + n2, sink = n1 + n2 + 1, nodes = n1 + n2 + 2;

  struct edge {
    std::size_t to, rev;
    Scalar cap;
    bool infinite;
  };
  std::vector<std::vector<edge>> g(nodes);
  auto add = [&](std::size_t u, std::size_t v, const Scalar& cap, bool infinite) {
    g[u].push_back({v, g[v].size(), cap, infinite});
    g[v].push_back({u, g[u].size() - 1, Scalar(0), false});
  };
  for (std::size_t i = 0; i < n1; ++i)
    if (T::positive(supply[i], tol)) add(source, i, supply[i], false);
  for (std::size_t j = 0; j < n2; ++j)
    if (T::positive(demand[j], tol)) add(n1 + j, sink, demand[j], false);
  std::vector<std::vector<std::size_t>> edge_slot(n1, std::vector<std::size_t>(n2, std::numeric_limits<std::size_t>::max()));
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j)
      if (allowed(i, j)) {
        edge_slot[i][j] = g[i].size();
        add(i, n1 + j, Scalar(0), true);
      }

  auto residual_positive = [&](const edge& e) { return e.infinite || T::positive(e.cap, tol); };

  transport_flow<Scalar> out;
  std::vector<std::size_t> prev_node(nodes), prev_edge(nodes);
  for (;;) {
    std::vector<bool> seen(nodes, false);
    std::deque<std::size_t> queue{source};
    seen[source] = true;
    while (!queue.empty() && !seen[sink]) {
      std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t k = 0; k < g[u].size(); ++k) {
        const edge& e = g[u][k];
        if (seen[e.to] || !residual_positive(e)) continue;
        seen[e.to] = true;
        prev_node[e.to] = u;
        prev_edge[e.to] = k;
        queue.push_back(e.to);
      }
    }
    if (!seen[sink]) break;

    bool bounded = false;
    Scalar push(0);
    for (std::size_t v = sink; v != source; v = prev_node[v]) {
      const edge& e = g[prev_node[v]][prev_edge[v]];
      if (e.infinite) continue;
      if (!bounded || e.cap < push) push = e.cap;
      bounded = true;
    }
    for (std::size_t v = sink; v != source; v = prev_node[v]) {
      edge& e = g[prev_node[v]][prev_edge[v]];
      if (!e.infinite) e.cap -= push;
      edge& r = g[e.to][e.rev];
      if (!r.infinite) r.cap += push;
    }
    out.value += push;
  }

  out.plan.assign(n1, std::vector<Scalar>(n2, Scalar(0)));
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j)
      if (edge_slot[i][j] != std::numeric_limits<std::size_t>::max()) {
        const edge& e = g[i][edge_slot[i][j]];
        out.plan[i][j] = g[e.to][e.rev].cap;  // reverse residual = flow
      }
  return out;
}

}  // namespace mmspace
