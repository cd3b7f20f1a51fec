#include "sdwanfp/topo.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

namespace sdwanfp {

std::size_t ClusterGraph::add_vertex(const Vertex& v) {
  vertices_.push_back(v);
  return vertices_.size() - 1;
}

void ClusterGraph::add_edge(std::size_t a, std::size_t b) {
  if (a >= vertices_.size() || b >= vertices_.size()) {
    throw ValidationError("edge references a missing vertex");
  }
  if (a == b) throw ValidationError("self-loop");
  const std::pair<std::size_t, std::size_t> e = std::minmax(a, b);
  const auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
  if (it != edges_.end() && *it == e) return;
  edges_.insert(it, e);
}

bool ClusterGraph::has_edge(std::size_t a, std::size_t b) const {
  const std::pair<std::size_t, std::size_t> e = std::minmax(a, b);
  return std::binary_search(edges_.begin(), edges_.end(), e);
}

namespace {

bool graph_protocol(Label l) { return is_control(l); }

std::pair<Ipv4, Ipv4> endpoints(const Flow& f) {
  if (const auto* k2 = std::get_if<FlowKey2>(&f.key)) return {k2->ip_a, k2->ip_b};
  const auto& k5 = std::get<FlowKey5>(f.key);
  return {k5.ip_a, k5.ip_b};
}

}  // namespace

ClusterGraph build_graph(std::span<const Flow> flows, std::span<const Label> protocols,
                         const std::map<Label, RoleAssignment>& roles,
                         const GraphOptions& options) {
  if (flows.size() != protocols.size()) {
    throw ValidationError("build_graph: one protocol label per flow required");
  }
  // (protocol, low ip, high ip) -> packets
  std::map<std::tuple<Label, Ipv4, Ipv4>, std::size_t> pairs;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    if (!graph_protocol(protocols[i])) continue;
    const auto [a, b] = endpoints(flows[i]);
    if (a == b) continue;
    pairs[{protocols[i], a, b}] += flows[i].packets.size();
  }

  std::set<std::pair<Label, Ipv4>> vertex_keys;
  for (const auto& [key, packets] : pairs) {
    if (packets < options.min_edge_packets) continue;
    vertex_keys.emplace(std::get<0>(key), std::get<1>(key));
    vertex_keys.emplace(std::get<0>(key), std::get<2>(key));
  }

  ClusterGraph g;
  std::map<std::pair<Label, Ipv4>, std::size_t> index;
  for (const auto& [proto, ip] : vertex_keys) {
    Role role = Role::unknown;
    if (auto it = roles.find(proto); it != roles.end()) role = it->second.role_of(ip);
    index[{proto, ip}] = g.add_vertex({ip, proto, role});
  }
  for (const auto& [key, packets] : pairs) {
    if (packets < options.min_edge_packets) continue;
    const auto& [proto, a, b] = key;
    g.add_edge(index.at({proto, a}), index.at({proto, b}));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Graph edit distance
//
// For a partial injective map f from V1 into V2 (unmapped vertices deleted,
// unused targets inserted), the unit-cost total is
//   deletions + insertions + relabels + |E1| + |E2| - 2 * preserved
// where preserved counts E1 edges whose mapped endpoints are adjacent in G2.

namespace {

constexpr int kDeleted = -1;

struct Dense {
  std::size_t n = 0;
  std::vector<int> label;
  std::vector<char> adj;  // n * n
  std::size_t edges = 0;

  explicit Dense(const ClusterGraph& g) : n(g.vertex_count()), adj(n * n, 0), edges(g.edge_count()) {
    for (const auto& v : g.vertices()) {
      label.push_back(static_cast<int>(v.protocol) * 8 + static_cast<int>(v.role));
    }
    for (const auto& [a, b] : g.edges()) adj[a * n + b] = adj[b * n + a] = 1;
  }
  bool edge(std::size_t a, std::size_t b) const { return adj[a * n + b] != 0; }
};

std::size_t mapping_cost(const Dense& g1, const Dense& g2, const std::vector<int>& map) {
  std::size_t mapped = 0, relabels = 0, preserved = 0;
  for (std::size_t u = 0; u < g1.n; ++u) {
    if (map[u] == kDeleted) continue;
    ++mapped;
    relabels += g1.label[u] != g2.label[static_cast<std::size_t>(map[u])];
    for (std::size_t w = u + 1; w < g1.n; ++w) {
      if (map[w] != kDeleted && g1.edge(u, w) &&
          g2.edge(static_cast<std::size_t>(map[u]), static_cast<std::size_t>(map[w]))) {
        ++preserved;
      }
    }
  }
  return (g1.n - mapped) + (g2.n - mapped) + relabels + g1.edges + g2.edges - 2 * preserved;
}

class ExactSearch {
 public:
  ExactSearch(const Dense& g1, const Dense& g2, std::size_t upper)
      : g1_(g1), g2_(g2), best_(upper), map_(g1.n, kDeleted), used_(g2.n, 0) {
    order_.resize(g1.n);
    std::iota(order_.begin(), order_.end(), 0);
    std::vector<std::size_t> degree(g1.n, 0);
    for (std::size_t u = 0; u < g1.n; ++u) {
      for (std::size_t w = 0; w < g1.n; ++w) degree[u] += g1.edge(u, w);
    }
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return degree[a] > degree[b]; });
  }

  std::size_t run() {
    dfs(0, 0, g1_.edges, g2_.edges);
    return best_;
  }

 private:
  // Lower bound on the vertex cost of matching the unprocessed G1 vertices
  // against the unused G2 vertices.
  std::size_t vertex_bound(std::size_t depth) const {
    std::map<int, int> diff;
    std::size_t left = 0, right = 0;
    for (std::size_t k = depth; k < order_.size(); ++k) {
      ++diff[g1_.label[order_[k]]];
      ++left;
    }
    std::size_t common = 0;
    for (std::size_t v = 0; v < g2_.n; ++v) {
      if (used_[v]) continue;
      ++right;
      auto it = diff.find(g2_.label[v]);
      if (it != diff.end() && it->second > 0) {
        --it->second;
        ++common;
      }
    }
    return std::max(left, right) - common;
  }

  // cost: settled cost so far; r1/r2: edges not yet settled in each graph.
  void dfs(std::size_t depth, std::size_t cost, std::size_t r1, std::size_t r2) {
    const std::size_t edge_bound = r1 > r2 ? r1 - r2 : r2 - r1;
    if (cost + edge_bound + vertex_bound(depth) >= best_) return;
    if (depth == order_.size()) {
      // Remaining G2 edges touch inserted vertices and are all inserted.
      best_ = std::min(best_, cost + r2 + vertex_bound(depth));
      return;
    }
    const std::size_t u = order_[depth];
    // Edges from u to already processed vertices settle now on the G1 side.
    std::size_t settled1 = 0;
    for (std::size_t k = 0; k < depth; ++k) settled1 += g1_.edge(u, order_[k]);

    for (std::size_t v = 0; v < g2_.n; ++v) {
      if (used_[v]) continue;
      // G2 edges from v to images of processed vertices settle now too.
      std::size_t settled2 = 0, preserved = 0;
      for (std::size_t k = 0; k < depth; ++k) {
        const int w = map_[order_[k]];
        if (w == kDeleted) continue;
        if (g2_.edge(v, static_cast<std::size_t>(w))) {
          ++settled2;
          preserved += g1_.edge(u, order_[k]);
        }
      }
      const std::size_t step = (g1_.label[u] != g2_.label[v]) + settled1 + settled2 - 2 * preserved;
      map_[u] = static_cast<int>(v);
      used_[v] = 1;
      dfs(depth + 1, cost + step, r1 - settled1, r2 - settled2);
      used_[v] = 0;
      map_[u] = kDeleted;
    }
    dfs(depth + 1, cost + 1 + settled1, r1 - settled1, r2);
  }

  const Dense& g1_;
  const Dense& g2_;
  std::size_t best_;
  std::vector<std::size_t> order_;
  std::vector<int> map_;
  std::vector<char> used_;
};

// Seeded assignment followed by pairwise-swap local search.
std::vector<int> greedy_mapping(const ClusterGraph& a, const ClusterGraph& b, const Dense& g1,
                                const Dense& g2) {
  std::vector<int> map(g1.n, kDeleted);
  std::vector<char> used(g2.n, 0);
  std::map<std::pair<Label, Ipv4>, std::size_t> by_key;
  for (std::size_t v = 0; v < g2.n; ++v) by_key[{b.vertices()[v].protocol, b.vertices()[v].ip}] = v;
  for (std::size_t u = 0; u < g1.n; ++u) {
    auto it = by_key.find({a.vertices()[u].protocol, a.vertices()[u].ip});
    if (it != by_key.end() && !used[it->second]) {
      map[u] = static_cast<int>(it->second);
      used[it->second] = 1;
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t u = 0; u < g1.n; ++u) {
      if (map[u] != kDeleted) continue;
      for (std::size_t v = 0; v < g2.n; ++v) {
        if (used[v] || (pass == 0 && g1.label[u] != g2.label[v])) continue;
        map[u] = static_cast<int>(v);
        used[v] = 1;
        break;
      }
    }
  }

  std::size_t cost = mapping_cost(g1, g2, map);
  // Candidate targets: every G2 vertex plus deletion.
  for (int round = 0; round < 50; ++round) {
    bool improved = false;
    for (std::size_t u = 0; u < g1.n; ++u) {
      for (int v = kDeleted; v < static_cast<int>(g2.n); ++v) {
        if (v == map[u]) continue;
        std::vector<int> trial = map;
        // Swap with whichever G1 vertex currently holds v.
        if (v != kDeleted) {
          for (std::size_t w = 0; w < g1.n; ++w) {
            if (trial[w] == v) trial[w] = map[u];
          }
        }
        trial[u] = v;
        const std::size_t c = mapping_cost(g1, g2, trial);
        if (c < cost) {
          cost = c;
          map = std::move(trial);
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
  return map;
}

}  // namespace

GedResult ged(const ClusterGraph& g1, const ClusterGraph& g2, const GedOptions& options) {
  const Dense d1(g1), d2(g2);
  const std::vector<int> seed = greedy_mapping(g1, g2, d1, d2);
  const std::size_t upper = mapping_cost(d1, d2, seed);
  if (d1.n > options.exact_vertex_limit || d2.n > options.exact_vertex_limit) {
    return {upper, false};
  }
  ExactSearch search(d1, d2, upper + 1);
  return {std::min(upper, search.run()), true};
}

SimilarityScore similarity(const ClusterGraph& g1, const ClusterGraph& g2,
                           const GedOptions& options) {
  SimilarityScore s;
  s.denominator = g1.vertex_count() + g1.edge_count() + g2.vertex_count() + g2.edge_count();
  if (s.denominator == 0) return s;
  const GedResult r = ged(g1, g2, options);
  s.ged = r.distance;
  s.exact = r.exact;
  s.sim = std::clamp(1.0 - static_cast<double>(r.distance) / static_cast<double>(s.denominator),
                     0.0, 1.0);
  return s;
}

nlohmann::json to_json(const ClusterGraph& g) {
  nlohmann::json j;
  auto& vs = j["vertices"] = nlohmann::json::array();
  for (const auto& v : g.vertices()) {
    vs.push_back({{"ip", v.ip.str()},
                  {"protocol", std::string(to_string(v.protocol))},
                  {"role", std::string(to_string(v.role))}});
  }
  auto& es = j["edges"] = nlohmann::json::array();
  for (const auto& [a, b] : g.edges()) es.push_back({a, b});
  return j;
}

ClusterGraph graph_from_json(const nlohmann::json& j) {
  ClusterGraph g;
  for (const auto& v : j.at("vertices")) {
    const Label proto = label_from_string(v.at("protocol").get<std::string>());
    if (!graph_protocol(proto)) throw ValidationError("graph vertex protocol must be a control protocol");
    g.add_vertex({Ipv4::parse(v.at("ip").get<std::string>()), proto,
                  role_from_string(v.at("role").get<std::string>())});
  }
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) throw ValidationError("graph edge must be [i, j]");
    g.add_edge(e[0].get<std::size_t>(), e[1].get<std::size_t>());
  }
  return g;
}

nlohmann::json to_json(const SimilarityScore& s) {
  return {{"ged", s.ged}, {"denominator", s.denominator}, {"sim", s.sim}, {"exact", s.exact}};
}

std::string to_dot(const ClusterGraph& g) {
  std::ostringstream out;
  out << "graph control_plane {\n";
  for (std::size_t i = 0; i < g.vertex_count(); ++i) {
    const auto& v = g.vertices()[i];
    out << "  v" << i << " [label=\"" << v.ip.str() << "\\n" << to_string(v.protocol) << " ("
        << to_string(v.role) << ")\"";
    if (v.role == Role::primary) out << ", style=bold";
    out << "];\n";
  }
  for (const auto& [a, b] : g.edges()) out << "  v" << a << " -- v" << b << ";\n";
  out << "}\n";
  return out.str();
}

}  // namespace sdwanfp
