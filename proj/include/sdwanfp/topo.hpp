#ifndef SDWANFP_TOPO_HPP
#define SDWANFP_TOPO_HPP

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdwanfp/roles.hpp"
#include "json.hpp"

namespace sdwanfp {

struct Vertex {
  Ipv4 ip;
  Label protocol = Label::RAFT;
  Role role = Role::unknown;
  friend bool operator==(const Vertex&, const Vertex&) = default;
};

/// Undirected, simple graph of protocol processes.
class ClusterGraph {
 public:
  std::size_t add_vertex(const Vertex& v);
  /// Ignores duplicates; throws on self-loops and unknown vertices.
  void add_edge(std::size_t a, std::size_t b);
  bool has_edge(std::size_t a, std::size_t b) const;

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  friend bool operator==(const ClusterGraph&, const ClusterGraph&) = default;

 private:
  std::vector<Vertex> vertices_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;  // first < second, sorted
};

struct GraphOptions {
  // A node pair needs at least this many packets of a protocol to count as
  // an edge; isolated misclassified windows otherwise add spurious edges.
  std::size_t min_edge_packets = 1;
};

/// One vertex per (ip, protocol) on a qualifying pair and one edge per pair.
/// `protocols[i]` labels `flows[i]`; flows labeled outside RAFT/SWIM/OPENFLOW
/// are ignored. Roles come from `roles[protocol]`, else unknown.
ClusterGraph build_graph(std::span<const Flow> flows, std::span<const Label> protocols,
                         const std::map<Label, RoleAssignment>& roles,
                         const GraphOptions& options = {});

struct GedOptions {
  std::size_t exact_vertex_limit = 12;  // per graph
};

struct GedResult {
  std::size_t distance = 0;
  bool exact = true;  // false: greedy upper bound
};

/// Unit-cost graph edit distance; vertex labels are (protocol, role).
GedResult ged(const ClusterGraph& g1, const ClusterGraph& g2, const GedOptions& options = {});

struct SimilarityScore {
  std::size_t ged = 0;
  std::size_t denominator = 0;
  double sim = 1.0;
  bool exact = true;
};

SimilarityScore similarity(const ClusterGraph& g1, const ClusterGraph& g2,
                           const GedOptions& options = {});

nlohmann::json to_json(const ClusterGraph& g);
ClusterGraph graph_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimilarityScore& s);
std::string to_dot(const ClusterGraph& g);

}  // namespace sdwanfp

#endif  // SDWANFP_TOPO_HPP
