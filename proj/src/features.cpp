#include "sdwanfp/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace sdwanfp {

int phase1_class(Label l) {
  if (is_control(l)) return kControl;
  if (l == Label::DATA) return kData;
  return kUnlabeled;
}

int phase2_class(Label l) {
  switch (l) {
    case Label::RAFT: return kRaft;
    case Label::SWIM: return kSwim;
    case Label::OPENFLOW: return kOpenFlow;
    default: return kUnlabeled;
  }
}

Label phase2_label(int cls) {
  switch (cls) {
    case kRaft: return Label::RAFT;
    case kSwim: return Label::SWIM;
    case kOpenFlow: return Label::OPENFLOW;
    default: return Label::UNKNOWN;
  }
}

namespace {

struct BinTotals {
  double bytes = 0;
  double packets = 0;
  double payload = 0;
};

Sequence to_rows(const std::vector<BinTotals>& bins, double bin_secs) {
  Sequence S(bins.size(), StepFeatures{0, 0, 0});
  for (std::size_t t = 0; t < bins.size(); ++t) {
    if (bins[t].packets == 0) continue;
    S[t][kBps] = bins[t].bytes / bin_secs;
    S[t][kPps] = bins[t].packets / bin_secs;
    S[t][kLen] = bins[t].payload / bins[t].packets;
  }
  return S;
}

}  // namespace

Sequence extract_sequence(const Flow& flow, double t0, double t1, int steps) {
  if (steps < 1) throw ValidationError("steps must be >= 1");
  if (!(t1 > t0)) throw ValidationError("window must satisfy t0 < t1");
  const double bin_secs = (t1 - t0) / steps;
  std::vector<BinTotals> bins(static_cast<std::size_t>(steps));
  for (const auto& p : flow.packets) {
    const double q = (p.ts - t0) / bin_secs + 1e-9;
    if (q < 0 || q >= steps) continue;
    auto& b = bins[static_cast<std::size_t>(q)];
    b.bytes += p.total_len;
    b.packets += 1;
    b.payload += p.payload_len;
  }
  return to_rows(bins, bin_secs);
}

Sequence extract_sequence(const Flow& flow, const FlowWindow& window) {
  std::vector<BinTotals> bins(window.bins.size());
  for (std::size_t t = 0; t < window.bins.size(); ++t) {
    for (std::size_t i : window.bins[t]) {
      const auto& p = flow.packets[i];
      bins[t].bytes += p.total_len;
      bins[t].packets += 1;
      bins[t].payload += p.payload_len;
    }
  }
  return to_rows(bins, window.bin_secs);
}

namespace {

std::vector<Ipv4> rank_counts(const std::map<Ipv4, std::size_t>& counts, std::size_t k) {
  std::vector<std::pair<Ipv4, std::size_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<Ipv4> out;
  for (std::size_t i = 0; i < items.size() && i < k; ++i) out.push_back(items[i].first);
  return out;
}

std::pair<Ipv4, Ipv4> endpoints(const Flow& f) {
  if (const auto* k2 = std::get_if<FlowKey2>(&f.key)) return {k2->ip_a, k2->ip_b};
  const auto& k5 = std::get<FlowKey5>(f.key);
  return {k5.ip_a, k5.ip_b};
}

}  // namespace

std::vector<Ipv4> rank_top_k_nodes(std::span<const Flow> flows, std::size_t k) {
  if (k < 1) throw ValidationError("k must be >= 1");
  std::map<Ipv4, std::size_t> counts;
  for (const auto& f : flows) {
    auto [a, b] = endpoints(f);
    ++counts[a];
    if (b != a) ++counts[b];
  }
  return rank_counts(counts, k);
}

namespace {

// initiator -> responder pairs present among the flows.
using DirectedPairs = std::set<std::pair<Ipv4, Ipv4>>;

DirectedPairs directed_pairs(std::span<const Flow> flows) {
  DirectedPairs out;
  for (const auto& f : flows) out.emplace(f.initiator, f.responder);
  return out;
}

DirectionEncoding encode_with(const DirectedPairs& pairs, Ipv4 src, std::span<const Ipv4> order) {
  DirectionEncoding enc;
  enc.node_order.assign(order.begin(), order.end());
  enc.values.reserve(order.size());
  for (Ipv4 node : order) {
    std::int8_t d = 0;
    if (!node.unspecified() && node != src) {
      if (pairs.contains({src, node})) {
        d = 1;
      } else if (pairs.contains({node, src})) {
        d = -1;
      }
    }
    enc.values.push_back(d);
  }
  return enc;
}

}  // namespace

DirectionEncoding encode_direction(std::span<const Flow> flows, Ipv4 src,
                                   std::span<const Ipv4> node_order) {
  if (node_order.empty()) throw ValidationError("node_order must be non-empty");
  return encode_with(directed_pairs(flows), src, node_order);
}

Label majority_label(std::span<const FlowPacket> packets) {
  std::map<Label, std::size_t> counts;
  std::map<Label, std::size_t> first_seen;
  for (std::size_t i = 0; i < packets.size(); ++i) {
    ++counts[packets[i].label];
    first_seen.try_emplace(packets[i].label, i);
  }
  Label best = Label::UNKNOWN;
  std::size_t best_count = 0;
  std::size_t best_first = 0;
  for (const auto& [label, n] : counts) {
    const std::size_t first = first_seen[label];
    if (n > best_count || (n == best_count && first < best_first)) {
      best = label;
      best_count = n;
      best_first = first;
    }
  }
  return best;
}

std::vector<SequenceSample> build_samples(std::span<const Flow> flows, const SampleOptions& options) {
  for (const auto& f : flows) {
    if (f.granularity() != options.granularity) {
      throw ValidationError("build_samples: flow granularity does not match options");
    }
  }
  std::vector<SequenceSample> samples;
  if (flows.empty()) return samples;
  const bool phase1 = options.granularity == Granularity::two_tuple;

  std::vector<Ipv4> order;
  if (phase1) {
    order = rank_top_k_nodes(flows, std::max<std::size_t>(options.node_slots, 1));
    order.resize(std::max<std::size_t>(options.node_slots, 1));
  } else {
    // Rank every node by its number of distinct peers.
    std::set<std::pair<Ipv4, Ipv4>> pairs;
    for (const auto& f : flows) pairs.insert(endpoints(f));
    std::map<Ipv4, std::size_t> peers;
    for (const auto& [a, b] : pairs) {
      ++peers[a];
      ++peers[b];
    }
    order = rank_counts(peers, peers.size());
    if (options.node_slots > 0) order.resize(options.node_slots);
  }

  const DirectedPairs pairs = directed_pairs(flows);
  std::map<Ipv4, DirectionEncoding> by_src;

  for (std::size_t fi = 0; fi < flows.size(); ++fi) {
    const Flow& flow = flows[fi];
    auto enc_it = by_src.find(flow.initiator);
    if (enc_it == by_src.end()) {
      enc_it = by_src.emplace(flow.initiator, encode_with(pairs, flow.initiator, order)).first;
    }
    const auto windows = windowize(flow, options.window_secs, options.steps);
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
      const FlowWindow& w = windows[wi];
      if (w.packet_count() == 0) continue;
      std::vector<FlowPacket> in_window;
      std::set<std::uint32_t> sessions;
      for (const auto& bin : w.bins) {
        for (std::size_t i : bin) {
          in_window.push_back(flow.packets[i]);
          sessions.insert(flow.packets[i].session);
        }
      }
      std::stable_sort(in_window.begin(), in_window.end(),
                       [](const FlowPacket& a, const FlowPacket& b) { return a.ts < b.ts; });
      SequenceSample s;
      s.S = extract_sequence(flow, w);
      s.sessions = phase1 ? static_cast<std::uint32_t>(sessions.size()) : 0;
      s.direction = enc_it->second;
      s.src_ip = flow.initiator;
      const Label majority = majority_label(in_window);
      s.label = phase1 ? phase1_class(majority) : phase2_class(majority);
      s.granularity = options.granularity;
      s.flow_index = fi;
      s.window_index = wi;
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

}  // namespace sdwanfp
