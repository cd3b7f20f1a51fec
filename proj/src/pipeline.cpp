#include "sdwanfp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "sdwanfp/io.hpp"

namespace sdwanfp {

using nlohmann::json;

ScenarioConfig scenario_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("scenario config must be a JSON object");
  ScenarioConfig c;
  c.cluster = cluster_spec_from_json(j.at("cluster"));
  if (j.contains("events")) {
    for (const auto& e : j["events"]) c.events.push_back(event_from_json(e));
  }
  c.duration = j.value("duration", c.duration);
  c.seed = j.value("seed", c.seed);
  if (j.contains("background")) {
    for (const auto& b : j["background"]) {
      BackgroundSpec s;
      s.profile = background_profile_from_string(b.at("profile").get<std::string>());
      s.pairs = b.value("pairs", 1);
      if (s.pairs < 0) throw ValidationError("background pairs must be >= 0");
      c.background.push_back(s);
    }
  }
  if (j.contains("capture_site") && !j["capture_site"].is_null()) {
    c.capture_site = j["capture_site"].get<int>();
  }
  if (!(c.duration >= 0)) throw ValidationError("duration must be >= 0");
  return c;
}

json to_json(const ScenarioConfig& c) {
  json events = json::array();
  for (const auto& e : c.events) events.push_back(to_json(e));
  json bg = json::array();
  for (const auto& b : c.background) {
    bg.push_back({{"profile", std::string(to_string(b.profile))}, {"pairs", b.pairs}});
  }
  json j = {{"cluster", to_json(c.cluster)},
            {"events", events},
            {"duration", c.duration},
            {"seed", c.seed},
            {"background", bg}};
  j["capture_site"] = c.capture_site ? json(*c.capture_site) : json(nullptr);
  return j;
}

Trace simulate_scenario(const ScenarioConfig& config) {
  std::vector<Trace> parts;
  parts.push_back(simulate_control(config.cluster, config.events, config.duration, config.seed));
  for (std::size_t i = 0; i < config.background.size(); ++i) {
    const auto& b = config.background[i];
    if (b.pairs == 0) continue;
    const std::uint64_t seed = config.seed * 1000003ULL + 7919ULL * (i + 1);
    parts.push_back(simulate_background(b.profile, config.duration, seed, {b.pairs}));
  }
  Trace merged = merge_traces(parts);
  if (config.capture_site) return capture_site(merged, config.cluster, *config.capture_site);
  return merged;
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  c.hidden = j.value("hidden", c.hidden);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  c.session_dim = j.value("session_dim", c.session_dim);
  c.dense_width = j.value("dense_width", c.dense_width);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.cv_folds = j.value("cv_folds", c.cv_folds);
  if (c.hidden < 1 || c.batch_size < 1 || c.epochs < 1 || !(c.learning_rate > 0) ||
      c.session_dim < 1 || c.dense_width < 1 || c.cv_folds < 0) {
    throw ValidationError("train config values must be positive");
  }
  return c;
}

DefenseConfig defense_config_from_json(const json& j) {
  DefenseConfig d;
  d.kind = defense_kind_from_string(j.value("kind", std::string("fpa")));
  d.noise_fraction = j.value("noise_fraction", d.noise_fraction);
  d.lambda_fraction = j.value("lambda_fraction", d.lambda_fraction);
  if (j.contains("kept_coefficients") && !j["kept_coefficients"].is_null()) {
    d.kept_coefficients = j["kept_coefficients"].get<int>();
    if (*d.kept_coefficients < 1) throw ValidationError("kept_coefficients must be >= 1");
  }
  d.seed = j.value("seed", d.seed);
  if (!(d.noise_fraction >= 0) || !(d.lambda_fraction >= 0)) {
    throw ValidationError("defense fractions must be >= 0");
  }
  return d;
}

PipelineConfig pipeline_config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("pipeline config must be a JSON object");
  PipelineConfig c;
  c.window_secs = j.value("window_secs", c.window_secs);
  c.steps = j.value("steps", c.steps);
  c.k = j.value("k", c.k);
  c.phase2_slots = j.value("phase2_slots", c.phase2_slots);
  c.theta_consensus = j.value("theta_consensus", c.theta_consensus);
  c.theta_southbound = j.value("theta_southbound", c.theta_southbound);
  c.min_edge_packets = j.value("min_edge_packets", c.min_edge_packets);
  c.control_vote = j.value("control_vote", c.control_vote);
  if (j.contains("train")) c.train = train_config_from_json(j["train"], c.train);
  if (j.contains("defense") && !j["defense"].is_null()) c.defense = defense_config_from_json(j["defense"]);
  if (!(c.window_secs > 0) || c.steps < 1 || c.k < 1 || c.phase2_slots < 1 ||
      !(c.theta_consensus > 0) || !(c.theta_southbound > 0) || c.min_edge_packets < 1 ||
      !(c.control_vote > 0 && c.control_vote <= 1)) {
    throw ValidationError("pipeline config values must be positive");
  }
  return c;
}

json to_json(const PipelineConfig& c) {
  json j = {{"window_secs", c.window_secs},
            {"steps", c.steps},
            {"k", c.k},
            {"phase2_slots", c.phase2_slots},
            {"theta_consensus", c.theta_consensus},
            {"theta_southbound", c.theta_southbound},
            {"min_edge_packets", c.min_edge_packets},
            {"control_vote", c.control_vote},
            {"train",
             {{"hidden", c.train.hidden},
              {"learning_rate", c.train.learning_rate},
              {"batch_size", c.train.batch_size},
              {"epochs", c.train.epochs},
              {"seed", c.train.seed},
              {"session_dim", c.train.session_dim},
              {"dense_width", c.train.dense_width},
              {"cv_folds", c.train.cv_folds}}}};
  if (c.defense) {
    j["defense"] = {{"kind", std::string(to_string(c.defense->kind))},
                    {"noise_fraction", c.defense->noise_fraction},
                    {"lambda_fraction", c.defense->lambda_fraction},
                    {"seed", c.defense->seed}};
    if (c.defense->kept_coefficients) j["defense"]["kept_coefficients"] = *c.defense->kept_coefficients;
  }
  return j;
}

Trace control_packets(const Trace& trace) {
  Trace out;
  std::copy_if(trace.begin(), trace.end(), std::back_inserter(out),
               [](const PacketRecord& r) { return is_control(r.label); });
  return out;
}

std::vector<SequenceSample> phase1_samples(const Trace& trace, const PipelineConfig& config) {
  const auto flows = assemble_flows_2tuple(trace);
  return build_samples(flows, {Granularity::two_tuple, config.window_secs, config.steps, config.k});
}

std::vector<SequenceSample> phase2_samples(const Trace& trace, const PipelineConfig& config) {
  const auto flows = assemble_flows_5tuple(control_packets(trace));
  return build_samples(flows,
                       {Granularity::five_tuple, config.window_secs, config.steps, config.phase2_slots});
}

std::vector<SequenceSample> balance_classes(const std::vector<SequenceSample>& samples,
                                            std::size_t per_class, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].label != kUnlabeled) by_class[samples[i].label].push_back(i);
  }
  if (by_class.empty()) return {};
  std::size_t cap = per_class;
  if (cap == 0) {
    cap = samples.size();
    for (const auto& [c, idx] : by_class) cap = std::min(cap, idx.size());
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> keep;
  for (auto& [c, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min(cap, idx.size()));
    keep.insert(keep.end(), idx.begin(), idx.end());
  }
  std::sort(keep.begin(), keep.end());
  std::vector<SequenceSample> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(samples[i]);
  return out;
}

Split split_samples(const std::vector<SequenceSample>& samples, double train_fraction,
                    std::uint64_t seed) {
  if (!(train_fraction > 0 && train_fraction < 1)) {
    throw ValidationError("train_fraction must be in (0, 1)");
  }
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
  Split s;
  for (std::size_t i = 0; i < idx.size(); ++i) (i < cut ? s.train : s.test).push_back(samples[idx[i]]);
  return s;
}

std::vector<Label> flow_labels(const std::vector<Flow>& flows) {
  std::vector<Label> out;
  out.reserve(flows.size());
  for (const auto& f : flows) out.push_back(majority_label(f.packets));
  return out;
}

namespace {

std::vector<Flow> select_flows(const std::vector<Flow>& flows, const std::vector<Label>& protocols,
                               std::initializer_list<Label> wanted) {
  std::vector<Flow> out;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    if (std::find(wanted.begin(), wanted.end(), protocols[i]) != wanted.end()) out.push_back(flows[i]);
  }
  return out;
}

RoleAssignment all_secondary(const RoleAssignment& base, std::string protocol) {
  RoleAssignment a = base;
  a.protocol = std::move(protocol);
  for (auto& e : a.nodes) e.role = Role::secondary;
  return a;
}

RoleAssignment configured_roles(const std::vector<Node>& nodes, std::initializer_list<NodeKind> kinds,
                                const std::string& primary, std::string protocol) {
  RoleAssignment a;
  a.protocol = std::move(protocol);
  for (const auto& n : nodes) {
    if (std::find(kinds.begin(), kinds.end(), n.kind) == kinds.end()) continue;
    a.nodes.push_back({n.ip, 0, 0.0, n.id == primary ? Role::primary : Role::secondary});
  }
  std::sort(a.nodes.begin(), a.nodes.end(),
            [](const auto& x, const auto& y) { return x.ip < y.ip; });
  return a;
}

}  // namespace

ProtocolRoles assign_roles(const std::vector<Flow>& flows, const std::vector<Label>& protocols,
                           const PipelineConfig& config) {
  if (flows.size() != protocols.size()) throw ValidationError("assign_roles: one label per flow");
  ProtocolRoles r;
  const auto consensus = select_flows(flows, protocols, {Label::RAFT, Label::SWIM});
  if (!consensus.empty()) {
    r.consensus = infer_roles(zscores(consensus), config.theta_consensus, "RAFT+SWIM");
    r.by_protocol[Label::RAFT] = *r.consensus;
    r.by_protocol[Label::SWIM] = all_secondary(*r.consensus, "SWIM");
  }
  const auto southbound = select_flows(flows, protocols, {Label::OPENFLOW});
  if (!southbound.empty()) {
    r.southbound = infer_roles(zscores(southbound), config.theta_southbound, "OPENFLOW");
    r.by_protocol[Label::OPENFLOW] = *r.southbound;
  }
  return r;
}

ClusterGraph truth_graph(const Trace& trace, const ClusterSpec& spec, const GraphOptions& options) {
  const auto flows = assemble_flows_5tuple(control_packets(trace));
  const auto labels = flow_labels(flows);
  const auto nodes = cluster_nodes(spec);
  std::map<Label, RoleAssignment> roles;
  roles[Label::RAFT] = configured_roles(nodes, {NodeKind::storage}, resolved_primary_storage(spec), "RAFT");
  roles[Label::SWIM] = configured_roles(nodes, {NodeKind::storage, NodeKind::controller}, "", "SWIM");
  roles[Label::OPENFLOW] = configured_roles(nodes, {NodeKind::controller, NodeKind::switch_},
                                            resolved_master_controller(spec), "OPENFLOW");
  return build_graph(flows, labels, roles, options);
}

namespace {

bool any_labeled(const std::vector<SequenceSample>& samples) {
  return std::any_of(samples.begin(), samples.end(),
                     [](const SequenceSample& s) { return s.label != kUnlabeled; });
}

EvalReport eval_labeled(const std::vector<SequenceSample>& samples, const std::vector<int>& predicted,
                        Task task) {
  std::vector<int> actual;
  actual.reserve(samples.size());
  for (const auto& s : samples) actual.push_back(s.label);
  return evaluate_predictions(predicted, actual, class_names(task));
}

int argmax(const Eigen::VectorXd& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<int>(i);
}

}  // namespace

InferResult infer(const Trace& trace, const SequenceModel& phase1, const SequenceModel& phase2,
                  const PipelineConfig& config) {
  if (phase1.dims().task != Task::binary) throw ValidationError("phase-1 model must be binary");
  if (phase2.dims().task != Task::multiclass) throw ValidationError("phase-2 model must be multiclass");
  InferResult result;

  const auto flows2 = assemble_flows_2tuple(trace);
  result.two_tuple_flows = flows2.size();
  auto samples1 = build_samples(
      flows2, {Granularity::two_tuple, config.window_secs, config.steps,
               static_cast<std::size_t>(phase1.dims().direction_width)});
  if (config.defense && !samples1.empty()) samples1 = apply_defense(samples1, *config.defense);

  std::vector<int> pred1;
  std::vector<double> votes(flows2.size(), 0.0), windows(flows2.size(), 0.0);
  const auto proba1 = predict_proba(phase1, samples1);
  for (std::size_t i = 0; i < samples1.size(); ++i) {
    const int p = argmax(proba1[i]);
    pred1.push_back(p);
    windows[samples1[i].flow_index] += 1;
    votes[samples1[i].flow_index] += p == kControl;
  }
  if (any_labeled(samples1)) result.phase1_eval = eval_labeled(samples1, pred1, Task::binary);

  std::set<FlowKey2> kept;
  for (std::size_t f = 0; f < flows2.size(); ++f) {
    if (windows[f] > 0 && votes[f] / windows[f] >= config.control_vote) {
      kept.insert(std::get<FlowKey2>(flows2[f].key));
    }
  }
  result.control_flows = kept.size();
  if (kept.empty()) {
    result.warnings.push_back("no flows were classified as control traffic; graph is empty");
    return result;
  }

  Trace control;
  for (const auto& r : trace) {
    const FlowKey2 key = r.src_ip < r.dst_ip ? FlowKey2{r.src_ip, r.dst_ip} : FlowKey2{r.dst_ip, r.src_ip};
    if (kept.contains(key)) control.push_back(r);
  }
  result.flows = assemble_flows_5tuple(control);
  auto samples2 = build_samples(
      result.flows, {Granularity::five_tuple, config.window_secs, config.steps,
                     static_cast<std::size_t>(phase2.dims().direction_width)});
  if (config.defense && !samples2.empty()) samples2 = apply_defense(samples2, *config.defense);

  const auto proba2 = predict_proba(phase2, samples2);
  std::vector<Eigen::VectorXd> per_flow(result.flows.size(), Eigen::VectorXd::Zero(phase2.dims().classes));
  std::vector<int> pred2;
  for (std::size_t i = 0; i < samples2.size(); ++i) {
    per_flow[samples2[i].flow_index] += proba2[i];
    pred2.push_back(argmax(proba2[i]));
  }
  for (const auto& v : per_flow) result.protocols.push_back(phase2_label(argmax(v)));
  if (any_labeled(samples2)) result.phase2_eval = eval_labeled(samples2, pred2, Task::multiclass);

  result.roles = assign_roles(result.flows, result.protocols, config);
  if (!result.roles.consensus) result.warnings.push_back("no consensus-family flows; storage roles unknown");
  if (!result.roles.southbound) result.warnings.push_back("no southbound flows; controller roles unknown");
  for (const auto* a : {&result.roles.consensus, &result.roles.southbound}) {
    if (*a && (*a)->degenerate) {
      result.warnings.push_back((*a)->protocol + " packet counts are all equal; no primary can be identified");
    }
  }
  result.graph = build_graph(result.flows, result.protocols, result.roles.by_protocol,
                             {config.min_edge_packets});
  return result;
}

json to_json(const InferResult& r) {
  json j;
  j["two_tuple_flows"] = r.two_tuple_flows;
  j["control_flows"] = r.control_flows;
  j["five_tuple_flows"] = r.flows.size();
  std::map<std::string, std::size_t> counts;
  for (Label l : r.protocols) ++counts[std::string(to_string(l))];
  j["protocol_flows"] = counts;
  j["roles"] = json::object();
  if (r.roles.consensus) j["roles"]["consensus"] = to_json(*r.roles.consensus);
  if (r.roles.southbound) j["roles"]["southbound"] = to_json(*r.roles.southbound);
  j["graph"] = to_json(r.graph);
  j["warnings"] = r.warnings;
  if (r.phase1_eval) j["phase1"] = to_json(*r.phase1_eval);
  if (r.phase2_eval) j["phase2"] = to_json(*r.phase2_eval);
  return j;
}

}  // namespace sdwanfp
