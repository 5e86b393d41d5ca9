#include <algorithm>
#include <functional>
#include <queue>
#include <utility>

#include "snk/error.hpp"
#include "snk/mesh.hpp"

namespace snk {

EdgeGraph EdgeGraph::from_mesh(const TriMesh& mesh) {
  std::vector<std::pair<int, int>> edges;
  edges.reserve(3 * static_cast<std::size_t>(mesh.num_faces()));
  const auto& F = mesh.faces();
  for (int f = 0; f < mesh.num_faces(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const int a = F(f, k);
      const int b = F(f, (k + 1) % 3);
      edges.emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  EdgeGraph graph;
  graph.adjacency.resize(static_cast<std::size_t>(mesh.num_vertices()));
  const auto& V = mesh.vertices();
  for (const auto& [a, b] : edges) {
    const double len = (V.row(a) - V.row(b)).norm();
    graph.adjacency[a].push_back({b, len});
    graph.adjacency[b].push_back({a, len});
  }
  return graph;
}

std::vector<double> geodesic_distances(const EdgeGraph& graph, int source) {
  const int n = static_cast<int>(graph.adjacency.size());
  if (source < 0 || source >= n) throw InputError("geodesic source vertex out of range");
  std::vector<double> dist(static_cast<std::size_t>(n), kUnreachable);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (const auto& nb : graph.adjacency[v]) {
      const double cand = d + nb.length;
      if (cand < dist[nb.vertex]) {
        dist[nb.vertex] = cand;
        queue.emplace(cand, nb.vertex);
      }
    }
  }
  return dist;
}

std::vector<double> geodesic_distances(const TriMesh& mesh, int source) {
  return geodesic_distances(EdgeGraph::from_mesh(mesh), source);
}

}  // namespace snk
