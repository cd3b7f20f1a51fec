#include "sdwanfp/io.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace sdwanfp {

using nlohmann::json;

namespace {

// Field order follows the documented record schema.
nlohmann::ordered_json ordered_record(const PacketRecord& r) {
  return {{"ts", r.ts},
          {"src_ip", r.src_ip.str()},
          {"src_port", r.src_port},
          {"dst_ip", r.dst_ip.str()},
          {"dst_port", r.dst_port},
          {"proto", std::string(to_string(r.proto))},
          {"total_len", r.total_len},
          {"payload_len", r.payload_len},
          {"label", std::string(to_string(r.label))}};
}

nlohmann::ordered_json ordered_sample(const SequenceSample& s) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : s.S) rows.push_back({r[0], r[1], r[2]});
  std::vector<std::string> order;
  for (const auto& ip : s.direction.node_order) order.push_back(ip.str());
  std::vector<int> dir(s.direction.values.begin(), s.direction.values.end());
  return {{"S", std::move(rows)},
          {"sessions", s.sessions},
          {"direction", dir},
          {"node_order", order},
          {"src_ip", s.src_ip.str()},
          {"label", s.label},
          {"granularity", std::string(to_string(s.granularity))}};
}

}  // namespace

json to_json(const PacketRecord& r) { return json::parse(ordered_record(r).dump()); }

PacketRecord record_from_json(const json& j) {
  PacketRecord r;
  r.ts = j.at("ts").get<double>();
  r.src_ip = Ipv4::parse(j.at("src_ip").get<std::string>());
  r.dst_ip = Ipv4::parse(j.at("dst_ip").get<std::string>());
  const auto sp = j.at("src_port").get<long>();
  const auto dp = j.at("dst_port").get<long>();
  if (sp < 0 || sp > 65535 || dp < 0 || dp > 65535) throw ValidationError("port out of range");
  r.src_port = static_cast<std::uint16_t>(sp);
  r.dst_port = static_cast<std::uint16_t>(dp);
  r.proto = proto_from_string(j.at("proto").get<std::string>());
  r.total_len = j.at("total_len").get<std::uint32_t>();
  r.payload_len = j.at("payload_len").get<std::uint32_t>();
  if (r.payload_len > r.total_len) throw ValidationError("payload_len exceeds total_len");
  r.label = label_from_string(j.value("label", std::string("UNKNOWN")));
  return r;
}

void write_trace_jsonl(std::ostream& out, const Trace& trace) {
  for (const auto& r : trace) out << ordered_record(r).dump() << '\n';
}

namespace {

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw ValidationError("line " + std::to_string(n) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ValidationError("line " + std::to_string(n) + ": " + e.what());
    }
  }
}

}  // namespace

Trace read_trace_jsonl(std::istream& in) {
  Trace trace;
  for_each_line(in, [&](const json& j) { trace.push_back(record_from_json(j)); });
  require_sorted(trace, "trace file");
  return trace;
}

json to_json(const SequenceSample& s) { return json::parse(ordered_sample(s).dump()); }

SequenceSample sample_from_json(const json& j) {
  SequenceSample s;
  for (const auto& row : j.at("S")) {
    if (!row.is_array() || row.size() != 3) throw ShapeError("each S row needs 3 columns");
    s.S.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>()});
  }
  s.sessions = j.at("sessions").get<std::uint32_t>();
  for (int d : j.at("direction").get<std::vector<int>>()) {
    if (d < -1 || d > 1) throw ValidationError("direction entries must be -1, 0 or 1");
    s.direction.values.push_back(static_cast<std::int8_t>(d));
  }
  for (const auto& ip : j.at("node_order").get<std::vector<std::string>>()) {
    s.direction.node_order.push_back(Ipv4::parse(ip));
  }
  if (s.direction.node_order.size() != s.direction.values.size()) {
    throw ShapeError("direction and node_order lengths differ");
  }
  s.src_ip = Ipv4::parse(j.at("src_ip").get<std::string>());
  s.label = j.at("label").get<int>();
  s.granularity = granularity_from_string(j.at("granularity").get<std::string>());
  return s;
}

void write_samples_jsonl(std::ostream& out, const std::vector<SequenceSample>& samples) {
  for (const auto& s : samples) out << ordered_sample(s).dump() << '\n';
}

std::vector<SequenceSample> read_samples_jsonl(std::istream& in) {
  std::vector<SequenceSample> out;
  for_each_line(in, [&](const json& j) { out.push_back(sample_from_json(j)); });
  return out;
}

json to_json(const ClusterSpec& spec) {
  json sites = json::array();
  for (const auto& s : spec.sites) {
    sites.push_back({{"id", s.id},
                     {"storages", s.storages},
                     {"controllers", s.controllers},
                     {"switches", s.switches}});
  }
  json plan = json::object();
  for (const auto& [id, ip] : spec.ip_plan) plan[id] = ip.str();
  const auto& z = spec.sizes;
  return {{"sites", sites},
          {"raft_heartbeat_interval", spec.raft_heartbeat_interval},
          {"swim_probe_period", spec.swim_probe_period},
          {"of_stats_period", spec.of_stats_period},
          {"of_writes_per_period", spec.of_writes_per_period},
          {"primary_storage", resolved_primary_storage(spec)},
          {"master_controller", resolved_master_controller(spec)},
          {"ip_plan", plan},
          {"jitter_fraction", spec.jitter_fraction},
          {"failure_detection", spec.failure_detection},
          {"election_duration", spec.election_duration},
          {"election_rounds", spec.election_rounds},
          {"sizes",
           {{"raft_heartbeat", z.raft_heartbeat},
            {"raft_ack", z.raft_ack},
            {"raft_vote", z.raft_vote},
            {"swim_probe", z.swim_probe},
            {"swim_ack", z.swim_ack},
            {"of_write", z.of_write},
            {"of_stats_request", z.of_stats_request},
            {"of_stats_reply", z.of_stats_reply},
            {"of_role", z.of_role}}}};
}

ClusterSpec cluster_spec_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("cluster spec must be a JSON object");
  ClusterSpec spec;
  for (const auto& s : j.at("sites")) {
    SiteSpec site;
    site.id = s.at("id").get<int>();
    site.storages = s.value("storages", 0);
    site.controllers = s.value("controllers", 0);
    site.switches = s.value("switches", 0);
    spec.sites.push_back(site);
  }
  spec.raft_heartbeat_interval = j.value("raft_heartbeat_interval", spec.raft_heartbeat_interval);
  spec.swim_probe_period = j.value("swim_probe_period", spec.swim_probe_period);
  spec.of_stats_period = j.value("of_stats_period", spec.of_stats_period);
  spec.of_writes_per_period = j.value("of_writes_per_period", spec.of_writes_per_period);
  spec.primary_storage = j.value("primary_storage", std::string());
  spec.master_controller = j.value("master_controller", std::string());
  if (j.contains("ip_plan")) {
    for (const auto& [id, ip] : j["ip_plan"].items()) spec.ip_plan[id] = Ipv4::parse(ip.get<std::string>());
  }
  spec.jitter_fraction = j.value("jitter_fraction", spec.jitter_fraction);
  spec.failure_detection = j.value("failure_detection", spec.failure_detection);
  spec.election_duration = j.value("election_duration", spec.election_duration);
  spec.election_rounds = j.value("election_rounds", spec.election_rounds);
  if (j.contains("sizes")) {
    const auto& z = j["sizes"];
    auto& s = spec.sizes;
    s.raft_heartbeat = z.value("raft_heartbeat", s.raft_heartbeat);
    s.raft_ack = z.value("raft_ack", s.raft_ack);
    s.raft_vote = z.value("raft_vote", s.raft_vote);
    s.swim_probe = z.value("swim_probe", s.swim_probe);
    s.swim_ack = z.value("swim_ack", s.swim_ack);
    s.of_write = z.value("of_write", s.of_write);
    s.of_stats_request = z.value("of_stats_request", s.of_stats_request);
    s.of_stats_reply = z.value("of_stats_reply", s.of_stats_reply);
    s.of_role = z.value("of_role", s.of_role);
  }
  validate(spec);
  return spec;
}

json to_json(const ScenarioEvent& e) {
  return {{"kind", e.kind == ScenarioEvent::Kind::disconnect_node ? "disconnect_node" : "reconnect_node"},
          {"node", e.node},
          {"at", e.at}};
}

ScenarioEvent event_from_json(const json& j) {
  ScenarioEvent e;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "disconnect_node") {
    e.kind = ScenarioEvent::Kind::disconnect_node;
  } else if (kind == "reconnect_node") {
    e.kind = ScenarioEvent::Kind::reconnect_node;
  } else {
    throw ValidationError("unknown event kind: " + kind);
  }
  e.node = j.at("node").get<std::string>();
  e.at = j.at("at").get<double>();
  return e;
}

// ---------------------------------------------------------------------------
// pcap

namespace {

constexpr std::uint32_t kMagicMicro = 0xa1b2c3d4;
constexpr std::uint32_t kMagicNano = 0xa1b23c4d;
constexpr std::uint32_t kLinkEthernet = 1;
constexpr std::uint32_t kLinkRaw = 101;
constexpr std::uint32_t kLinkIpv4 = 228;

std::uint32_t bswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00) | ((v << 8) & 0xff0000) | (v << 24);
}

std::uint16_t be16(const unsigned char* p) { return static_cast<std::uint16_t>((p[0] << 8) | p[1]); }

bool read_exact(std::istream& in, void* dst, std::size_t n) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

// Parses one IPv4 datagram; false when it is not TCP/UDP or is truncated.
bool parse_ipv4(const unsigned char* p, std::size_t len, PacketRecord& r) {
  if (len < 20 || (p[0] >> 4) != 4) return false;
  const std::size_t ihl = static_cast<std::size_t>(p[0] & 0x0f) * 4;
  const std::size_t total = be16(p + 2);
  if (ihl < 20 || total < ihl) return false;
  const unsigned proto = p[9];
  if (proto != 6 && proto != 17) return false;
  // Ports must be present even when the snapshot is truncated.
  if (len < ihl + 4) return false;
  r.src_ip = Ipv4(p[12], p[13], p[14], p[15]);
  r.dst_ip = Ipv4(p[16], p[17], p[18], p[19]);
  r.src_port = be16(p + ihl);
  r.dst_port = be16(p + ihl + 2);
  r.total_len = static_cast<std::uint32_t>(total);
  std::size_t header = ihl;
  if (proto == 6) {
    r.proto = Proto::TCP;
    if (len < ihl + 13) return false;
    header += static_cast<std::size_t>(p[ihl + 12] >> 4) * 4;
  } else {
    r.proto = Proto::UDP;
    header += 8;
  }
  r.payload_len = total > header ? static_cast<std::uint32_t>(total - header) : 0;
  r.label = Label::UNKNOWN;
  return true;
}

}  // namespace

Trace read_pcap(std::istream& in, PcapStats* stats) {
  std::array<std::uint32_t, 6> gh{};
  if (!read_exact(in, gh.data(), 24)) throw ValidationError("pcap: truncated global header");
  bool swap = false;
  double tick = 1e-6;
  if (gh[0] == kMagicMicro || gh[0] == kMagicNano) {
    tick = gh[0] == kMagicNano ? 1e-9 : 1e-6;
  } else if (bswap32(gh[0]) == kMagicMicro || bswap32(gh[0]) == kMagicNano) {
    swap = true;
    tick = bswap32(gh[0]) == kMagicNano ? 1e-9 : 1e-6;
  } else {
    throw ValidationError("pcap: unrecognized magic (pcapng is not supported)");
  }
  auto fix = [swap](std::uint32_t v) { return swap ? bswap32(v) : v; };
  const std::uint32_t link = fix(gh[5]) & 0x0fffffff;
  if (link != kLinkEthernet && link != kLinkRaw && link != kLinkIpv4) {
    throw ValidationError("pcap: unsupported link type " + std::to_string(link));
  }

  PcapStats local;
  Trace trace;
  std::vector<unsigned char> frame;
  bool have_origin = false;
  double origin = 0;
  for (;;) {
    std::array<std::uint32_t, 4> ph{};
    in.read(reinterpret_cast<char*>(ph.data()), 16);
    if (in.gcount() == 0) break;
    if (in.gcount() != 16) throw ValidationError("pcap: truncated record header");
    const std::uint32_t caplen = fix(ph[2]);
    if (caplen > (1u << 26)) throw ValidationError("pcap: implausible capture length");
    frame.resize(caplen);
    if (!read_exact(in, frame.data(), caplen)) throw ValidationError("pcap: truncated frame");
    ++local.frames;
    const double ts = fix(ph[0]) + fix(ph[1]) * tick;

    const unsigned char* p = frame.data();
    std::size_t len = caplen;
    if (link == kLinkEthernet) {
      if (len < 14) { ++local.skipped; continue; }
      std::uint16_t type = be16(p + 12);
      std::size_t off = 14;
      while ((type == 0x8100 || type == 0x88a8) && len >= off + 4) {
        type = be16(p + off + 2);
        off += 4;
      }
      if (type != 0x0800) { ++local.skipped; continue; }
      p += off;
      len -= off;
    }
    PacketRecord r;
    if (!parse_ipv4(p, len, r)) { ++local.skipped; continue; }
    if (!have_origin) {
      origin = ts;
      have_origin = true;
    }
    r.ts = ts - origin;
    trace.push_back(r);
  }
  std::stable_sort(trace.begin(), trace.end(),
                   [](const PacketRecord& a, const PacketRecord& b) { return a.ts < b.ts; });
  if (stats) *stats = local;
  return trace;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace sdwanfp
