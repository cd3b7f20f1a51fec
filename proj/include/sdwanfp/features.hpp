#ifndef SDWANFP_FEATURES_HPP
#define SDWANFP_FEATURES_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sdwanfp/flowproc.hpp"

namespace sdwanfp {

// Columns of one time step: bytes/s, packets/s, mean payload bytes.
using StepFeatures = std::array<double, 3>;
inline constexpr std::size_t kBps = 0;
inline constexpr std::size_t kPps = 1;
inline constexpr std::size_t kLen = 2;

using Sequence = std::vector<StepFeatures>;

struct DirectionEncoding {
  std::vector<std::int8_t> values;  // each in {-1, 0, +1}
  std::vector<Ipv4> node_order;     // 0.0.0.0 marks an empty slot
};

// Class ids per task.
inline constexpr int kUnlabeled = -1;
inline constexpr int kData = 0;
inline constexpr int kControl = 1;
inline constexpr int kRaft = 0;
inline constexpr int kSwim = 1;
inline constexpr int kOpenFlow = 2;

int phase1_class(Label l);  // kData / kControl / kUnlabeled
int phase2_class(Label l);  // kRaft / kSwim / kOpenFlow / kUnlabeled
Label phase2_label(int cls);

struct SequenceSample {
  Sequence S;
  std::uint32_t sessions = 0;
  DirectionEncoding direction;
  Ipv4 src_ip;
  int label = kUnlabeled;
  Granularity granularity = Granularity::two_tuple;
  // Provenance inside the flow list the sample was built from; not exported.
  std::size_t flow_index = 0;
  std::size_t window_index = 0;
};

/// Per-bin rates over [t0, t1) split into `steps` bins. Empty bins are zero.
Sequence extract_sequence(const Flow& flow, double t0, double t1, int steps);
Sequence extract_sequence(const Flow& flow, const FlowWindow& window);

/// IPs by descending flow participation, ties by ascending address. Returns
/// at most k entries.
std::vector<Ipv4> rank_top_k_nodes(std::span<const Flow> flows, std::size_t k);

/// Ternary encoding of how `src` relates to each reference node.
DirectionEncoding encode_direction(std::span<const Flow> flows, Ipv4 src,
                                   std::span<const Ipv4> node_order);

struct SampleOptions {
  Granularity granularity = Granularity::two_tuple;
  double window_secs = 50.0;
  int steps = 50;
  // Two-tuple: top-k reference nodes. Five-tuple: width the all-node
  // ranking is padded or truncated to (0 keeps every node).
  std::size_t node_slots = 8;
};

/// Majority ground-truth label of the packets; ties go to the label seen first.
Label majority_label(std::span<const FlowPacket> packets);

/// One sample per non-empty (flow, window), ordered by flow then window.
std::vector<SequenceSample> build_samples(std::span<const Flow> flows, const SampleOptions& options);

}  // namespace sdwanfp

#endif  // SDWANFP_FEATURES_HPP
