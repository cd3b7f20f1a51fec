#ifndef SDWANFP_FLOWPROC_HPP
#define SDWANFP_FLOWPROC_HPP

#include <cstdint>
#include <variant>
#include <vector>

#include "sdwanfp/core.hpp"

namespace sdwanfp {

enum class Granularity : std::uint8_t { two_tuple, five_tuple };

std::string_view to_string(Granularity g);
Granularity granularity_from_string(std::string_view s);

/// Unordered IP pair, ip_a < ip_b.
struct FlowKey2 {
  Ipv4 ip_a;
  Ipv4 ip_b;
  friend auto operator<=>(const FlowKey2&, const FlowKey2&) = default;
};

/// One transport connection; endpoints ordered so (ip_a, port_a) < (ip_b, port_b).
struct FlowKey5 {
  Ipv4 ip_a;
  std::uint16_t port_a = 0;
  Ipv4 ip_b;
  std::uint16_t port_b = 0;
  Proto proto = Proto::TCP;
  friend auto operator<=>(const FlowKey5&, const FlowKey5&) = default;
};

using FlowKey = std::variant<FlowKey2, FlowKey5>;

enum class Direction : std::uint8_t { forward, backward };

struct FlowPacket {
  double ts = 0.0;
  Direction dir = Direction::forward;
  std::uint32_t total_len = 0;
  std::uint32_t payload_len = 0;
  Label label = Label::UNKNOWN;
  // Index of the packet's 5-tuple among the sessions of this flow, in order
  // of first appearance. Always 0 for five-tuple flows.
  std::uint32_t session = 0;
};

struct Flow {
  FlowKey key;
  Ipv4 initiator;  // source of the first observed packet
  Ipv4 responder;
  std::vector<FlowPacket> packets;

  Granularity granularity() const {
    return std::holds_alternative<FlowKey2>(key) ? Granularity::two_tuple
                                                 : Granularity::five_tuple;
  }
  std::size_t session_count() const;
};

/// Bidirectional IP-pair flows, ordered by key.
std::vector<Flow> assemble_flows_2tuple(const Trace& trace);
/// Bidirectional connection flows, ordered by key.
std::vector<Flow> assemble_flows_5tuple(const Trace& trace);

/// Distinct 5-tuples between ip_a and ip_b with a packet in [t0, t1).
std::size_t count_sessions(const Trace& trace, Ipv4 ip_a, Ipv4 ip_b, double t0, double t1);

/// One window of a flow: `bins[t]` holds indices into flow.packets.
struct FlowWindow {
  double start = 0.0;
  double bin_secs = 0.0;
  std::vector<std::vector<std::size_t>> bins;

  double end() const { return start + bin_secs * static_cast<double>(bins.size()); }
  std::size_t packet_count() const;
};

/// Consecutive windows of `window_secs` from the flow's first packet, each
/// split into `steps` equal bins. The trailing partial window is kept.
std::vector<FlowWindow> windowize(const Flow& flow, double window_secs, int steps);

}  // namespace sdwanfp

#endif  // SDWANFP_FLOWPROC_HPP
