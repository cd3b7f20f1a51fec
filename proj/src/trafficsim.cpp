#include "sdwanfp/trafficsim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <unordered_set>

namespace sdwanfp {

namespace {

constexpr std::uint32_t kTcpHeaderBytes = 52;  // IPv4 + TCP with timestamps
constexpr std::uint32_t kUdpHeaderBytes = 28;
constexpr double kFanoutSpacing = 50e-6;       // back-to-back sends to several peers

std::uint8_t kind_octet(NodeKind k) {
  switch (k) {
    case NodeKind::storage: return 1;
    case NodeKind::controller: return 2;
    case NodeKind::switch_: return 3;
  }
  return 0;
}

std::string node_id(NodeKind k, int site, int index) {
  const char* prefix = k == NodeKind::storage ? "st" : k == NodeKind::controller ? "ctl" : "sw";
  return prefix + std::to_string(site) + "-" + std::to_string(index);
}

}  // namespace

std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::storage: return "storage";
    case NodeKind::controller: return "controller";
    case NodeKind::switch_: return "switch";
  }
  return "storage";
}

std::vector<Node> cluster_nodes(const ClusterSpec& spec) {
  std::vector<Node> nodes;
  for (const auto& site : spec.sites) {
    auto add = [&](NodeKind kind, int count) {
      for (int i = 1; i <= count; ++i) {
        Node n;
        n.id = node_id(kind, site.id, i);
        n.kind = kind;
        n.site = site.id;
        if (auto it = spec.ip_plan.find(n.id); it != spec.ip_plan.end()) {
          n.ip = it->second;
        } else {
          n.ip = Ipv4(10, static_cast<std::uint8_t>(site.id), kind_octet(kind),
                      static_cast<std::uint8_t>(i));
        }
        nodes.push_back(std::move(n));
      }
    };
    add(NodeKind::storage, site.storages);
    add(NodeKind::controller, site.controllers);
    add(NodeKind::switch_, site.switches);
  }
  return nodes;
}

namespace {

std::string first_of_kind(const ClusterSpec& spec, NodeKind kind) {
  for (const auto& n : cluster_nodes(spec)) {
    if (n.kind == kind) return n.id;
  }
  return {};
}

}  // namespace

std::string resolved_primary_storage(const ClusterSpec& spec) {
  return spec.primary_storage.empty() ? first_of_kind(spec, NodeKind::storage)
                                      : spec.primary_storage;
}

std::string resolved_master_controller(const ClusterSpec& spec) {
  return spec.master_controller.empty() ? first_of_kind(spec, NodeKind::controller)
                                        : spec.master_controller;
}

const Node& find_node(const std::vector<Node>& nodes, std::string_view id) {
  for (const auto& n : nodes) {
    if (n.id == id) return n;
  }
  throw ValidationError("unknown node id: " + std::string(id));
}

void validate(const ClusterSpec& spec) {
  if (spec.sites.empty()) throw ValidationError("cluster spec has no sites");
  std::set<int> site_ids;
  for (const auto& s : spec.sites) {
    if (s.id < 0 || s.id > 255) throw ValidationError("site id must be in 0..255");
    if (!site_ids.insert(s.id).second) {
      throw ValidationError("duplicate site id " + std::to_string(s.id));
    }
    if (s.storages < 0 || s.controllers < 0 || s.switches < 0 || s.storages > 254 ||
        s.controllers > 254 || s.switches > 254) {
      throw ValidationError("node counts per site must be in 0..254");
    }
  }
  if (!(spec.raft_heartbeat_interval > 0) || !(spec.swim_probe_period > 0) ||
      !(spec.of_stats_period > 0)) {
    throw ValidationError("all protocol intervals must be > 0");
  }
  if (spec.of_writes_per_period < 0) throw ValidationError("of_writes_per_period must be >= 0");
  if (spec.jitter_fraction < 0 || spec.jitter_fraction >= 0.5) {
    throw ValidationError("jitter_fraction must be in [0, 0.5)");
  }
  if (!(spec.failure_detection >= 0) || !(spec.election_duration > 0) ||
      spec.election_rounds < 1) {
    throw ValidationError("invalid election timing");
  }
  const auto nodes = cluster_nodes(spec);
  std::unordered_set<Ipv4> ips;
  for (const auto& n : nodes) {
    if (!ips.insert(n.ip).second) throw ValidationError("duplicate IP for node " + n.id);
  }
  for (const auto& [id, ip] : spec.ip_plan) {
    (void)ip;
    find_node(nodes, id);
  }
  const auto primary = resolved_primary_storage(spec);
  if (primary.empty()) throw ValidationError("cluster has no storage node");
  if (find_node(nodes, primary).kind != NodeKind::storage) {
    throw ValidationError("primary_storage is not a storage node: " + primary);
  }
  // A cluster without controllers has no southbound plane and no master.
  const auto master = resolved_master_controller(spec);
  if (master.empty()) return;
  if (find_node(nodes, master).kind != NodeKind::controller) {
    throw ValidationError("master_controller is not a controller node: " + master);
  }
}

namespace {

class ControlSimulator {
 public:
  ControlSimulator(const ClusterSpec& spec, std::span<const ScenarioEvent> events,
                   double duration, std::uint64_t seed)
      : spec_(spec), nodes_(cluster_nodes(spec)), duration_(duration), rng_(seed) {
    alive_.assign(nodes_.size(), true);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      switch (nodes_[i].kind) {
        case NodeKind::storage: storages_.push_back(i); members_.push_back(i); break;
        case NodeKind::controller: controllers_.push_back(i); members_.push_back(i); break;
        case NodeKind::switch_: switches_.push_back(i); break;
      }
      next_port_.push_back(static_cast<std::uint16_t>(32768 + (i * 97) % 2000));
    }
    std::sort(members_.begin(), members_.end());
    raft_leader_ = index_of(resolved_primary_storage(spec));
    if (const auto master = resolved_master_controller(spec); !master.empty()) {
      of_master_ = index_of(master);
    }
    configured_master_ = of_master_;

    for (const auto& ev : events) {
      index_of(ev.node);
      if (ev.at < 0 || ev.at > duration) {
        throw ValidationError("scenario event outside [0, duration]: " + ev.node);
      }
    }
    events_.assign(events.begin(), events.end());
  }

  Trace run() {
    if (duration_ <= 0) return {};
    schedule_protocol_timers();
    for (const auto& ev : events_) {
      const std::size_t node = index_of(ev.node);
      if (ev.kind == ScenarioEvent::Kind::disconnect_node) {
        at(ev.at, [this, node](double t) { disconnect(node, t); });
      } else {
        at(ev.at, [this, node](double t) { reconnect(node, t); });
      }
    }
    while (!queue_.empty()) {
      Timer timer = queue_.top();
      queue_.pop();
      timer.fire(timer.at);
    }
    std::stable_sort(out_.begin(), out_.end(),
                     [](const Emitted& a, const Emitted& b) {
                       return a.rec.ts < b.rec.ts || (a.rec.ts == b.rec.ts && a.seq < b.seq);
                     });
    Trace trace;
    trace.reserve(out_.size());
    for (auto& e : out_) trace.push_back(e.rec);
    return trace;
  }

 private:
  struct Timer {
    double at;
    std::uint64_t seq;
    std::function<void(double)> fire;
  };
  struct Later {
    bool operator()(const Timer& a, const Timer& b) const {
      return a.at > b.at || (a.at == b.at && a.seq > b.seq);
    }
  };
  struct Emitted {
    PacketRecord rec;
    std::uint64_t seq;
  };

  std::size_t index_of(std::string_view id) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].id == id) return i;
    }
    throw ValidationError("scenario references unknown node: " + std::string(id));
  }

  void at(double t, std::function<void(double)> fire) {
    if (t >= duration_) return;
    queue_.push(Timer{t, timer_seq_++, std::move(fire)});
  }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double jitter(double period) {
    const double f = spec_.jitter_fraction;
    return f > 0 ? uniform(-f, f) * period : 0.0;
  }

  // One-way delay: LAN inside a site, WAN between sites.
  double owd(std::size_t a, std::size_t b) const {
    const int da = std::abs(nodes_[a].site - nodes_[b].site);
    return da == 0 ? 0.0002 : 0.002 + 0.001 * da;
  }
  double reply_delay(std::size_t a, std::size_t b) { return 2 * owd(a, b) + uniform(0.0001, 0.0003); }

  std::uint16_t ephemeral(std::size_t node) {
    std::uint16_t p = next_port_[node];
    next_port_[node] = p >= 60999 ? 32768 : static_cast<std::uint16_t>(p + 1);
    return p;
  }

  // Persistent client port for a long-lived connection client -> server.
  std::uint16_t connection_port(std::size_t client, std::size_t server) {
    auto [it, inserted] = conn_ports_.try_emplace({client, server}, 0);
    if (inserted) it->second = ephemeral(client);
    return it->second;
  }

  void emit(double ts, std::size_t src, std::uint16_t sport, std::size_t dst,
            std::uint16_t dport, std::uint32_t payload, Label label) {
    if (ts < 0 || ts >= duration_) return;
    PacketRecord r;
    r.ts = ts;
    r.src_ip = nodes_[src].ip;
    r.dst_ip = nodes_[dst].ip;
    r.src_port = sport;
    r.dst_port = dport;
    r.proto = Proto::TCP;
    r.payload_len = payload;
    r.total_len = payload + kTcpHeaderBytes;
    r.label = label;
    out_.push_back(Emitted{r, emit_seq_++});
  }

  // Request on a persistent client->server connection plus optional reply.
  void exchange(double ts, std::size_t client, std::size_t server, std::uint16_t server_port,
                std::uint32_t request, std::optional<std::uint32_t> reply, Label label) {
    const std::uint16_t cport = connection_port(client, server);
    emit(ts, client, cport, server, server_port, request, label);
    if (reply && alive_[server]) {
      emit(ts + reply_delay(client, server), server, server_port, client, cport, *reply, label);
    }
  }

  void schedule_protocol_timers() {
    // Phases are drawn up front so the timer layout does not depend on events.
    if (!storages_.empty()) schedule_raft(0);
    std::vector<double> swim_phase(members_.size());
    for (auto& p : swim_phase) p = uniform(0.05, 0.95);
    swim_order_.resize(members_.size());
    swim_cursor_.assign(members_.size(), 0);
    for (std::size_t m = 0; m < members_.size(); ++m) {
      for (std::size_t o = 0; o < members_.size(); ++o) {
        if (o != m) swim_order_[m].push_back(members_[o]);
      }
      std::shuffle(swim_order_[m].begin(), swim_order_[m].end(), rng_);
    }
    const double of_phase = uniform(0.05, 0.45);
    for (std::size_t m = 0; m < members_.size(); ++m) {
      if (members_.size() > 1) schedule_swim(m, 0, swim_phase[m]);
    }
    if (!controllers_.empty() && !switches_.empty()) schedule_openflow(0, of_phase);
  }

  void schedule_raft(long round) {
    const double interval = spec_.raft_heartbeat_interval;
    const double t = (static_cast<double>(round) + 0.5) * interval + jitter(interval);
    at(t, [this, round](double now) {
      raft_heartbeat(now);
      schedule_raft(round + 1);
    });
  }

  void raft_heartbeat(double now) {
    if (!raft_leader_ || electing_ || !alive_[*raft_leader_]) return;
    const std::size_t leader = *raft_leader_;
    const auto& sz = spec_.sizes;
    int j = 0;
    for (std::size_t f : storages_) {
      if (f == leader) continue;
      exchange(now + kFanoutSpacing * j++, leader, f, kClusterPort, sz.raft_heartbeat,
               sz.raft_ack, Label::RAFT);
    }
  }

  void schedule_swim(std::size_t m, long round, double phase) {
    const double period = spec_.swim_probe_period;
    const double t = (static_cast<double>(round) + phase) * period + jitter(period);
    at(t, [this, m, round, phase](double now) {
      swim_probe(m, now);
      schedule_swim(m, round + 1, phase);
    });
  }

  void swim_probe(std::size_t m, double now) {
    const std::size_t self = members_[m];
    if (!alive_[self]) return;
    auto& order = swim_order_[m];
    const std::size_t target = order[swim_cursor_[m]++ % order.size()];
    // Every probe opens a fresh session on the shared cluster port.
    const std::uint16_t sport = ephemeral(self);
    const auto& sz = spec_.sizes;
    emit(now, self, sport, target, kClusterPort, sz.swim_probe, Label::SWIM);
    if (alive_[target]) {
      emit(now + reply_delay(self, target), target, kClusterPort, self, sport, sz.swim_ack,
           Label::SWIM);
    }
  }

  void schedule_openflow(long round, double phase) {
    const double period = spec_.of_stats_period;
    const double t = (static_cast<double>(round) + phase) * period + jitter(period);
    at(t, [this, round, phase](double now) {
      openflow_tick(now);
      schedule_openflow(round + 1, phase);
    });
  }

  void openflow_tick(double now) {
    const auto& sz = spec_.sizes;
    int j = 0;
    // Reads: every controller polls every switch.
    for (std::size_t c : controllers_) {
      if (!alive_[c]) continue;
      for (std::size_t s : switches_) {
        exchange(now + kFanoutSpacing * j++, c, s, kOpenFlowPort, sz.of_stats_request,
                 sz.of_stats_reply, Label::OPENFLOW);
      }
    }
    // Writes: only the master holds write permission.
    if (!of_master_ || handover_ || !alive_[*of_master_]) return;
    const std::size_t master = *of_master_;
    const int writes = spec_.of_writes_per_period;
    const double period = spec_.of_stats_period;
    for (int w = 0; w < writes; ++w) {
      const double slot = now + period * (0.5 + w) / (writes + 1);
      for (std::size_t s : switches_) {
        exchange(slot + kFanoutSpacing * j++, master, s, kOpenFlowPort, sz.of_write,
                 std::nullopt, Label::OPENFLOW);
      }
    }
  }

  void disconnect(std::size_t node, double now) {
    alive_[node] = false;
    const double detect = now + spec_.failure_detection;
    if (raft_leader_ && *raft_leader_ == node && !electing_) {
      at(detect, [this](double t) { start_election(t); });
    }
    if (of_master_ && *of_master_ == node && !handover_) {
      at(detect, [this](double t) { start_handover(t, std::nullopt); });
    }
  }

  void reconnect(std::size_t node, double now) {
    alive_[node] = true;
    if (nodes_[node].kind == NodeKind::storage && !raft_leader_ && !electing_) {
      at(now + spec_.failure_detection, [this](double t) { start_election(t); });
    }
    // The configured master reclaims mastership once it is back.
    if (node == configured_master_ && of_master_ != node && !handover_) {
      start_handover(now, node);
    }
  }

  std::vector<std::size_t> alive_of(const std::vector<std::size_t>& group) const {
    std::vector<std::size_t> out;
    for (std::size_t i : group) {
      if (alive_[i]) out.push_back(i);
    }
    return out;
  }

  // Survivors exchange vote rounds; the lowest-id (earliest declared)
  // survivor wins once the burst is over.
  void start_election(double now) {
    if (raft_leader_ && alive_[*raft_leader_]) return;
    electing_ = true;
    const auto survivors = alive_of(storages_);
    const double step = spec_.election_duration / spec_.election_rounds;
    const auto& sz = spec_.sizes;
    for (int r = 0; r < spec_.election_rounds; ++r) {
      int j = 0;
      const double t = now + r * step;
      for (std::size_t a : survivors) {
        for (std::size_t b : survivors) {
          if (a == b) continue;
          exchange(t + kFanoutSpacing * j++, a, b, kClusterPort, sz.raft_vote, sz.raft_vote,
                   Label::RAFT);
        }
      }
    }
    at(now + spec_.election_duration, [this](double) {
      const auto left = alive_of(storages_);
      raft_leader_ = left.empty() ? std::nullopt : std::optional<std::size_t>(left.front());
      electing_ = false;
    });
  }

  // Controllers send role requests to every switch; the winner becomes
  // master. `claimant` forces the outcome (configured master returning).
  void start_handover(double now, std::optional<std::size_t> claimant) {
    if (!claimant && of_master_ && alive_[*of_master_]) return;
    handover_ = true;
    const auto contenders = claimant ? std::vector<std::size_t>{*claimant} : alive_of(controllers_);
    const auto& sz = spec_.sizes;
    int j = 0;
    for (std::size_t c : contenders) {
      for (std::size_t s : switches_) {
        exchange(now + kFanoutSpacing * j++, c, s, kOpenFlowPort, sz.of_role, sz.of_role,
                 Label::OPENFLOW);
      }
    }
    at(now + 0.5, [this, claimant](double) {
      if (claimant) {
        of_master_ = claimant;
      } else {
        const auto left = alive_of(controllers_);
        of_master_ = left.empty() ? std::nullopt : std::optional<std::size_t>(left.front());
      }
      handover_ = false;
    });
  }

  const ClusterSpec& spec_;
  std::vector<Node> nodes_;
  double duration_;
  std::mt19937_64 rng_;
  std::vector<ScenarioEvent> events_;

  std::vector<std::size_t> storages_, controllers_, switches_, members_;
  std::vector<bool> alive_;
  std::vector<std::uint16_t> next_port_;
  std::map<std::pair<std::size_t, std::size_t>, std::uint16_t> conn_ports_;
  std::vector<std::vector<std::size_t>> swim_order_;
  std::vector<std::size_t> swim_cursor_;

  std::optional<std::size_t> raft_leader_;
  bool electing_ = false;
  std::optional<std::size_t> of_master_;
  std::optional<std::size_t> configured_master_;
  bool handover_ = false;

  std::priority_queue<Timer, std::vector<Timer>, Later> queue_;
  std::uint64_t timer_seq_ = 0;
  std::vector<Emitted> out_;
  std::uint64_t emit_seq_ = 0;
};

}  // namespace

Trace simulate_control(const ClusterSpec& spec, std::span<const ScenarioEvent> events,
                       double duration, std::uint64_t seed) {
  validate(spec);
  if (duration < 0) throw ValidationError("duration must be >= 0");
  ControlSimulator sim(spec, events, duration, seed);
  return sim.run();
}

std::string_view to_string(BackgroundProfile p) {
  switch (p) {
    case BackgroundProfile::periodic_app: return "periodic_app";
    case BackgroundProfile::streaming: return "streaming";
    case BackgroundProfile::bulk: return "bulk";
  }
  return "periodic_app";
}

BackgroundProfile background_profile_from_string(std::string_view s) {
  if (s == "periodic_app") return BackgroundProfile::periodic_app;
  if (s == "streaming") return BackgroundProfile::streaming;
  if (s == "bulk") return BackgroundProfile::bulk;
  throw ValidationError("unknown background profile: " + std::string(s));
}

namespace {

struct HostPair {
  Ipv4 client;
  Ipv4 server;
  std::uint16_t client_port;
  std::uint16_t server_port;
  Proto proto;
};

class PairEmitter {
 public:
  PairEmitter(Trace& out, const HostPair& hp, double duration) : out_(out), hp_(hp), duration_(duration) {}

  void send(double ts, bool from_client, std::uint32_t payload) {
    if (ts < 0 || ts >= duration_) return;
    PacketRecord r;
    r.ts = ts;
    r.src_ip = from_client ? hp_.client : hp_.server;
    r.dst_ip = from_client ? hp_.server : hp_.client;
    r.src_port = from_client ? hp_.client_port : hp_.server_port;
    r.dst_port = from_client ? hp_.server_port : hp_.client_port;
    r.proto = hp_.proto;
    r.payload_len = payload;
    r.total_len = payload + (hp_.proto == Proto::TCP ? kTcpHeaderBytes : kUdpHeaderBytes);
    r.label = Label::DATA;
    out_.push_back(r);
  }

 private:
  Trace& out_;
  HostPair hp_;
  double duration_;
};

void periodic_app(PairEmitter& tx, std::mt19937_64& rng, double duration) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double interval = 1.0 + 3.0 * u(rng);
  const double phase = u(rng) * interval;
  const double rtt = 0.0005 + 0.004 * u(rng);
  for (long k = 0;; ++k) {
    const double t = phase + k * interval + (u(rng) - 0.5) * 0.02 * interval;
    if (t >= duration) break;
    tx.send(t, true, 48);
    tx.send(t + rtt, false, 64);
  }
}

void streaming(PairEmitter& tx, std::mt19937_64& rng, double duration, bool acks) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::exponential_distribution<double> on_len(1.0 / 4.0), off_len(1.0 / 3.0);
  double t = 2.0 * u(rng);
  while (t < duration) {
    const double on_end = t + on_len(rng);
    const double rate = 40.0 + 40.0 * u(rng);
    std::exponential_distribution<double> gap(rate);
    int sent = 0;
    for (double p = t + gap(rng); p < on_end && p < duration; p += gap(rng)) {
      tx.send(p, false, 1000 + static_cast<std::uint32_t>(400 * u(rng)));
      if (acks && ++sent % 8 == 0) tx.send(p + 0.001, true, 0);
    }
    t = on_end + off_len(rng);
  }
}

void bulk(PairEmitter& tx, std::mt19937_64& rng, double duration) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double start = 0.2 * duration * u(rng);
  const double end = std::min(duration, start + (0.5 + 0.5 * u(rng)) * duration);
  const double rate = 20.0 + 20.0 * u(rng);
  int sent = 0;
  for (long k = 0;; ++k) {
    const double t = start + (k + (u(rng) - 0.5) * 0.04) / rate;
    if (t >= end) break;
    tx.send(t, true, 1448);
    if (++sent % 2 == 0) tx.send(t + 0.0008, false, 0);
  }
}

}  // namespace

Trace simulate_background(BackgroundProfile profile, double duration, std::uint64_t seed,
                          BackgroundOptions options) {
  Trace out;
  if (duration <= 0) return out;
  for (int p = 0; p < options.pairs; ++p) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(profile)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::uint32_t> host(1, 0xfffe);
    std::uniform_int_distribution<std::uint32_t> port(32768, 60999);
    std::uniform_int_distribution<std::uint32_t> client_host(1, 0xffffe);
    HostPair hp;
    hp.client = Ipv4(Ipv4(172, 16, 0, 0).value() + client_host(rng));
    hp.server = Ipv4(Ipv4(192, 168, 0, 0).value() + host(rng));
    hp.client_port = static_cast<std::uint16_t>(port(rng));
    hp.proto = Proto::TCP;
    bool acks = true;
    switch (profile) {
      case BackgroundProfile::periodic_app: hp.server_port = 2181; break;
      case BackgroundProfile::streaming:
        acks = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
        hp.proto = acks ? Proto::TCP : Proto::UDP;
        hp.server_port = 443;
        break;
      case BackgroundProfile::bulk: hp.server_port = 22; break;
    }
    PairEmitter tx(out, hp, duration);
    switch (profile) {
      case BackgroundProfile::periodic_app: periodic_app(tx, rng, duration); break;
      case BackgroundProfile::streaming: streaming(tx, rng, duration, acks); break;
      case BackgroundProfile::bulk: bulk(tx, rng, duration); break;
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const PacketRecord& a, const PacketRecord& b) { return a.ts < b.ts; });
  return out;
}

Trace merge_traces(std::span<const Trace> traces) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    require_sorted(traces[i], "merge_traces input " + std::to_string(i));
    total += traces[i].size();
  }
  Trace out;
  out.reserve(total);
  std::vector<std::size_t> cursor(traces.size(), 0);
  // Linear scan over inputs keeps ties in input order.
  while (out.size() < total) {
    std::size_t best = traces.size();
    for (std::size_t i = 0; i < traces.size(); ++i) {
      if (cursor[i] == traces[i].size()) continue;
      if (best == traces.size() || traces[i][cursor[i]].ts < traces[best][cursor[best]].ts) {
        best = i;
      }
    }
    out.push_back(traces[best][cursor[best]++]);
  }
  return out;
}

Trace capture_site(const Trace& trace, const ClusterSpec& spec, int site_id) {
  if (std::none_of(spec.sites.begin(), spec.sites.end(),
                   [site_id](const SiteSpec& s) { return s.id == site_id; })) {
    throw ValidationError("capture_site: no site with id " + std::to_string(site_id));
  }
  std::unordered_set<Ipv4> local;
  for (const auto& n : cluster_nodes(spec)) {
    if (n.site == site_id) local.insert(n.ip);
  }
  Trace out;
  for (const auto& r : trace) {
    if (local.contains(r.src_ip) || local.contains(r.dst_ip)) out.push_back(r);
  }
  return out;
}

}  // namespace sdwanfp
