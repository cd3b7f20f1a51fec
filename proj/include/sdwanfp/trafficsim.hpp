#ifndef SDWANFP_TRAFFICSIM_HPP
#define SDWANFP_TRAFFICSIM_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdwanfp/core.hpp"

namespace sdwanfp {

enum class NodeKind : std::uint8_t { storage, controller, switch_ };

std::string_view to_string(NodeKind k);

struct SiteSpec {
  int id = 1;
  int storages = 0;
  int controllers = 0;
  int switches = 0;
};

/// Payload sizes in bytes for every simulated message type.
struct MessageSizes {
  std::uint32_t raft_heartbeat = 96;
  std::uint32_t raft_ack = 32;
  std::uint32_t raft_vote = 48;
  std::uint32_t swim_probe = 64;
  std::uint32_t swim_ack = 64;
  std::uint32_t of_write = 128;
  std::uint32_t of_stats_request = 48;
  std::uint32_t of_stats_reply = 256;
  std::uint32_t of_role = 40;
};

struct ClusterSpec {
  std::vector<SiteSpec> sites;
  double raft_heartbeat_interval = 1.0;
  double swim_probe_period = 1.0;
  double of_stats_period = 1.0;
  // Write-operation messages the master sends to each switch per stats period.
  int of_writes_per_period = 8;
  // Empty means "first storage / first controller of the first site".
  std::string primary_storage;
  std::string master_controller;
  // Overrides for the default 10.<site>.<kind>.<index> addressing.
  std::map<std::string, Ipv4> ip_plan;
  double jitter_fraction = 0.05;
  // Time from losing a primary until survivors react.
  double failure_detection = 3.0;
  double election_duration = 2.0;
  int election_rounds = 3;
  MessageSizes sizes;
};

struct Node {
  std::string id;
  NodeKind kind = NodeKind::storage;
  int site = 0;
  Ipv4 ip;
};

/// Nodes in declaration order: per site storages, controllers, switches.
/// Ids are "st<site>-<i>", "ctl<site>-<i>", "sw<site>-<i>" with i from 1.
std::vector<Node> cluster_nodes(const ClusterSpec& spec);
std::string resolved_primary_storage(const ClusterSpec& spec);
std::string resolved_master_controller(const ClusterSpec& spec);
const Node& find_node(const std::vector<Node>& nodes, std::string_view id);

/// Throws ValidationError when the cluster description breaks an invariant.
void validate(const ClusterSpec& spec);

struct ScenarioEvent {
  enum class Kind : std::uint8_t { disconnect_node, reconnect_node };
  Kind kind = Kind::disconnect_node;
  std::string node;
  double at = 0.0;
};

// Well-known service ports.
inline constexpr std::uint16_t kClusterPort = 5679;  // Raft and SWIM share it
inline constexpr std::uint16_t kOpenFlowPort = 6653;

/// Labeled Raft + SWIM + OpenFlow traffic for the cluster over [0, duration).
/// Pure function of its arguments.
Trace simulate_control(const ClusterSpec& spec, std::span<const ScenarioEvent> events,
                       double duration, std::uint64_t seed);

enum class BackgroundProfile : std::uint8_t { periodic_app, streaming, bulk };

std::string_view to_string(BackgroundProfile p);
BackgroundProfile background_profile_from_string(std::string_view s);

struct BackgroundOptions {
  int pairs = 1;  // independent host pairs to generate
};

/// DATA-labeled background traffic between synthetic hosts outside 10/8.
Trace simulate_background(BackgroundProfile profile, double duration, std::uint64_t seed,
                          BackgroundOptions options = {});

/// Stable k-way merge by timestamp; ties keep input order.
Trace merge_traces(std::span<const Trace> traces);

/// Packets an observer inside one site would see: at least one endpoint in
/// the site.
Trace capture_site(const Trace& trace, const ClusterSpec& spec, int site_id);

}  // namespace sdwanfp

#endif  // SDWANFP_TRAFFICSIM_HPP
