#include "sdwanfp/flowproc.hpp"

#include <cmath>
#include <map>
#include <set>
#include <tuple>

namespace sdwanfp {

std::string_view to_string(Granularity g) {
  return g == Granularity::two_tuple ? "two_tuple" : "five_tuple";
}

Granularity granularity_from_string(std::string_view s) {
  if (s == "two_tuple") return Granularity::two_tuple;
  if (s == "five_tuple") return Granularity::five_tuple;
  throw ValidationError("unknown granularity: " + std::string(s));
}

std::size_t Flow::session_count() const {
  std::set<std::uint32_t> ids;
  for (const auto& p : packets) ids.insert(p.session);
  return ids.size();
}

namespace {

FlowKey5 key5_of(const PacketRecord& r) {
  FlowKey5 k;
  k.proto = r.proto;
  if (std::tie(r.src_ip, r.src_port) < std::tie(r.dst_ip, r.dst_port)) {
    k.ip_a = r.src_ip; k.port_a = r.src_port; k.ip_b = r.dst_ip; k.port_b = r.dst_port;
  } else {
    k.ip_a = r.dst_ip; k.port_a = r.dst_port; k.ip_b = r.src_ip; k.port_b = r.src_port;
  }
  return k;
}

FlowKey2 key2_of(const PacketRecord& r) {
  return r.src_ip < r.dst_ip ? FlowKey2{r.src_ip, r.dst_ip} : FlowKey2{r.dst_ip, r.src_ip};
}

FlowPacket to_flow_packet(const PacketRecord& r, const Flow& flow) {
  FlowPacket p;
  p.ts = r.ts;
  p.dir = r.src_ip == flow.initiator ? Direction::forward : Direction::backward;
  p.total_len = r.total_len;
  p.payload_len = r.payload_len;
  p.label = r.label;
  return p;
}

}  // namespace

std::vector<Flow> assemble_flows_2tuple(const Trace& trace) {
  require_sorted(trace, "assemble_flows_2tuple");
  struct Building {
    Flow flow;
    std::map<FlowKey5, std::uint32_t> sessions;
  };
  std::map<FlowKey2, Building> by_key;
  for (const auto& r : trace) {
    const FlowKey2 key = key2_of(r);
    auto [it, inserted] = by_key.try_emplace(key);
    Building& b = it->second;
    if (inserted) {
      b.flow.key = key;
      b.flow.initiator = r.src_ip;
      b.flow.responder = r.dst_ip;
    }
    FlowPacket p = to_flow_packet(r, b.flow);
    auto [sit, fresh] = b.sessions.try_emplace(key5_of(r), static_cast<std::uint32_t>(b.sessions.size()));
    (void)fresh;
    p.session = sit->second;
    b.flow.packets.push_back(p);
  }
  std::vector<Flow> flows;
  flows.reserve(by_key.size());
  for (auto& [key, b] : by_key) flows.push_back(std::move(b.flow));
  return flows;
}

std::vector<Flow> assemble_flows_5tuple(const Trace& trace) {
  require_sorted(trace, "assemble_flows_5tuple");
  std::map<FlowKey5, Flow> by_key;
  for (const auto& r : trace) {
    const FlowKey5 key = key5_of(r);
    auto [it, inserted] = by_key.try_emplace(key);
    Flow& f = it->second;
    if (inserted) {
      f.key = key;
      f.initiator = r.src_ip;
      f.responder = r.dst_ip;
    }
    f.packets.push_back(to_flow_packet(r, f));
  }
  std::vector<Flow> flows;
  flows.reserve(by_key.size());
  for (auto& [key, f] : by_key) flows.push_back(std::move(f));
  return flows;
}

std::size_t count_sessions(const Trace& trace, Ipv4 ip_a, Ipv4 ip_b, double t0, double t1) {
  std::set<FlowKey5> seen;
  for (const auto& r : trace) {
    if (r.ts < t0 || r.ts >= t1) continue;
    const bool between = (r.src_ip == ip_a && r.dst_ip == ip_b) ||
                         (r.src_ip == ip_b && r.dst_ip == ip_a);
    if (between) seen.insert(key5_of(r));
  }
  return seen.size();
}

std::size_t FlowWindow::packet_count() const {
  std::size_t n = 0;
  for (const auto& b : bins) n += b.size();
  return n;
}

namespace {

// Absorbs representation error when a timestamp sits exactly on a boundary.
constexpr double kBoundaryEps = 1e-9;

std::size_t floor_index(double offset, double width) {
  const double q = offset / width + kBoundaryEps;
  return q <= 0 ? 0 : static_cast<std::size_t>(std::floor(q));
}

}  // namespace

std::vector<FlowWindow> windowize(const Flow& flow, double window_secs, int steps) {
  if (!(window_secs > 0)) throw ValidationError("window_secs must be > 0");
  if (steps < 1) throw ValidationError("steps must be >= 1");
  std::vector<FlowWindow> windows;
  if (flow.packets.empty()) return windows;
  const double origin = flow.packets.front().ts;
  const double bin_secs = window_secs / steps;
  const std::size_t count = floor_index(flow.packets.back().ts - origin, window_secs) + 1;
  windows.resize(count);
  for (std::size_t w = 0; w < count; ++w) {
    windows[w].start = origin + static_cast<double>(w) * window_secs;
    windows[w].bin_secs = bin_secs;
    windows[w].bins.resize(static_cast<std::size_t>(steps));
  }
  for (std::size_t i = 0; i < flow.packets.size(); ++i) {
    const double offset = flow.packets[i].ts - origin;
    const std::size_t w = std::min(floor_index(offset, window_secs), count - 1);
    const double within = offset - static_cast<double>(w) * window_secs;
    const std::size_t bin =
        std::min(floor_index(within, bin_secs), static_cast<std::size_t>(steps - 1));
    windows[w].bins[bin].push_back(i);
  }
  return windows;
}

}  // namespace sdwanfp
