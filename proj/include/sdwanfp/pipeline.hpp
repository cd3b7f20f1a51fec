#ifndef SDWANFP_PIPELINE_HPP
#define SDWANFP_PIPELINE_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdwanfp/defense.hpp"
#include "sdwanfp/seqnet.hpp"
#include "sdwanfp/topo.hpp"
#include "sdwanfp/trafficsim.hpp"
#include "json.hpp"

namespace sdwanfp {

struct BackgroundSpec {
  BackgroundProfile profile = BackgroundProfile::streaming;
  int pairs = 1;
};

/// Everything needed to reproduce one simulated capture.
struct ScenarioConfig {
  ClusterSpec cluster;
  std::vector<ScenarioEvent> events;
  double duration = 300.0;
  std::uint64_t seed = 1;
  std::vector<BackgroundSpec> background;
  std::optional<int> capture_site;  // unset: full capture
};

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& c);

/// Control traffic merged with the background profiles, then restricted to
/// the capture scope.
Trace simulate_scenario(const ScenarioConfig& config);

struct PipelineConfig {
  double window_secs = 50.0;
  int steps = 50;
  std::size_t k = 8;               // two-tuple reference nodes
  std::size_t phase2_slots = 32;   // five-tuple direction width
  double theta_consensus = kConsensusTheta;
  double theta_southbound = kSouthboundTheta;
  std::size_t min_edge_packets = 8;
  // Fraction of a two-tuple flow's windows that must be predicted control
  // for the flow to be kept.
  double control_vote = 0.5;
  TrainConfig train;
  std::optional<DefenseConfig> defense;
};

PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
DefenseConfig defense_config_from_json(const nlohmann::json& j);

/// Packets labeled RAFT, SWIM or OPENFLOW.
Trace control_packets(const Trace& trace);

/// Two-tuple windows of the whole trace labeled control/data.
std::vector<SequenceSample> phase1_samples(const Trace& trace, const PipelineConfig& config);
/// Five-tuple windows of the ground-truth control packets labeled by protocol.
std::vector<SequenceSample> phase2_samples(const Trace& trace, const PipelineConfig& config);

/// Drops samples with kUnlabeled, then caps every class at `per_class`
/// (0 caps at the smallest class size) with a seeded draw. Order is kept.
std::vector<SequenceSample> balance_classes(const std::vector<SequenceSample>& samples,
                                            std::size_t per_class, std::uint64_t seed);

struct Split {
  std::vector<SequenceSample> train;
  std::vector<SequenceSample> test;
};
Split split_samples(const std::vector<SequenceSample>& samples, double train_fraction,
                    std::uint64_t seed);

/// Role assignment per protocol: RAFT uses the consensus family (RAFT and
/// SWIM flows), OPENFLOW the southbound family, and SWIM vertices are always
/// secondary since membership has no leader.
struct ProtocolRoles {
  std::optional<RoleAssignment> consensus;
  std::optional<RoleAssignment> southbound;
  std::map<Label, RoleAssignment> by_protocol;
};
ProtocolRoles assign_roles(const std::vector<Flow>& flows, const std::vector<Label>& protocols,
                           const PipelineConfig& config);

/// Majority ground-truth label of each flow.
std::vector<Label> flow_labels(const std::vector<Flow>& flows);

/// Ground-truth graph: true labels, configured primaries.
ClusterGraph truth_graph(const Trace& trace, const ClusterSpec& spec,
                         const GraphOptions& options = {});

struct InferResult {
  std::size_t two_tuple_flows = 0;
  std::size_t control_flows = 0;
  std::vector<Flow> flows;         // five-tuple flows of the kept packets
  std::vector<Label> protocols;    // predicted, one per flow
  ProtocolRoles roles;
  ClusterGraph graph;
  std::vector<std::string> warnings;
  // Present when the trace carries ground-truth labels.
  std::optional<EvalReport> phase1_eval;
  std::optional<EvalReport> phase2_eval;
};

InferResult infer(const Trace& trace, const SequenceModel& phase1, const SequenceModel& phase2,
                  const PipelineConfig& config);

nlohmann::json to_json(const InferResult& r);

}  // namespace sdwanfp

#endif  // SDWANFP_PIPELINE_HPP
