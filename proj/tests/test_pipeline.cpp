#include "doctest.h"
#include "helpers.hpp"
#include "sdwanfp/pipeline.hpp"

using namespace sdwanfp;

namespace {

std::vector<SequenceSample> labeled(std::initializer_list<int> labels) {
  std::vector<SequenceSample> out;
  for (int l : labels) {
    SequenceSample s;
    s.S = {{static_cast<double>(out.size()), 0, 0}};
    s.label = l;
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("balance_classes caps at the minority and drops unlabeled") {
    const auto samples = labeled({0, 0, 0, 0, 1, 1, kUnlabeled, 0, 1});
    const auto b = balance_classes(samples, 0, 3);
    std::size_t zeros = 0, ones = 0;
    double last = -1;
    for (const auto& s : b) {
      zeros += s.label == 0;
      ones += s.label == 1;
      CHECK(s.S[0][0] > last);
      last = s.S[0][0];
    }
    CHECK(zeros == 3);
    CHECK(ones == 3);
    CHECK(balance_classes(samples, 2, 3).size() == 4);
    CHECK(balance_classes(samples, 0, 3)[0].S == balance_classes(samples, 0, 3)[0].S);
  }

  TEST_CASE("split_samples partitions every sample once") {
    const auto samples = labeled({0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
    const auto s = split_samples(samples, 0.7, 9);
    CHECK(s.train.size() == 7);
    CHECK(s.test.size() == 3);
    std::vector<double> seen;
    for (const auto* part : {&s.train, &s.test}) {
      for (const auto& x : *part) seen.push_back(x.S[0][0]);
    }
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == static_cast<double>(i));
    CHECK_THROWS_AS(split_samples(samples, 1.0, 9), ValidationError);
  }

  TEST_CASE("roles from ground truth and the truth graph") {
    // One outlier among n nodes has z <= sqrt(n - 1), so theta 3 needs more than 10 members.
    auto spec = testing::wan_cluster(4);
    spec.primary_storage = "st2-3";
    spec.master_controller = "ctl1-2";
    const Trace trace = simulate_control(spec, {}, 120, 6);
    const auto flows = assemble_flows_5tuple(control_packets(trace));
    const auto roles = assign_roles(flows, flow_labels(flows), PipelineConfig{});
    REQUIRE(roles.consensus);
    REQUIRE(roles.southbound);
    CHECK(roles.consensus->primaries() == std::vector<Ipv4>{Ipv4(10, 2, 1, 3)});
    CHECK(roles.southbound->primaries() == std::vector<Ipv4>{Ipv4(10, 1, 2, 2)});
    CHECK(roles.by_protocol.at(Label::SWIM).primaries().empty());

    const auto g = truth_graph(trace, spec);
    std::size_t primaries = 0;
    for (const auto& v : g.vertices()) {
      if (v.role != Role::primary) continue;
      ++primaries;
      CHECK(((v.protocol == Label::RAFT && v.ip == Ipv4(10, 2, 1, 3)) ||
             (v.protocol == Label::OPENFLOW && v.ip == Ipv4(10, 1, 2, 2))));
    }
    CHECK(primaries == 2);
  }

  TEST_CASE("scenario and pipeline configs round trip") {
    ScenarioConfig sc;
    sc.cluster = testing::wan_cluster(2);
    sc.background = {{BackgroundProfile::bulk, 3}};
    sc.capture_site = 2;
    sc.events.push_back({ScenarioEvent::Kind::disconnect_node, "st1-1", 10.0});
    const auto back = scenario_from_json(nlohmann::json::parse(to_json(sc).dump()));
    CHECK(back.capture_site == 2);
    CHECK(back.background.size() == 1);
    CHECK(back.events.size() == 1);
    CHECK(simulate_scenario(back) == simulate_scenario(sc));

    PipelineConfig pc;
    pc.train.hidden = 7;
    pc.defense = DefenseConfig{};
    const auto pb = pipeline_config_from_json(to_json(pc));
    CHECK(pb.train.hidden == 7);
    CHECK(pb.defense.has_value());
    CHECK_THROWS(pipeline_config_from_json(nlohmann::json{{"steps", 0}}));
  }
}
