#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "sdwanfp/trafficsim.hpp"

using namespace sdwanfp;

namespace {

std::map<Ipv4, std::size_t> sent_by(const Trace& t, Label label, double t0 = 0, double t1 = 1e18) {
  std::map<Ipv4, std::size_t> out;
  for (const auto& r : t) {
    if (r.label == label && r.ts >= t0 && r.ts < t1) ++out[r.src_ip];
  }
  return out;
}

std::vector<double> per_second_counts(const Trace& t, double duration) {
  std::vector<double> c(static_cast<std::size_t>(duration), 0.0);
  for (const auto& r : t) ++c[static_cast<std::size_t>(r.ts)];
  return c;
}

double variance(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / v.size();
}

}  // namespace

TEST_SUITE("trafficsim") {
  TEST_CASE("heartbeat rounds for four storages") {
    const ClusterSpec spec = testing::storage_cluster(4);
    const Trace t = simulate_control(spec, {}, 60.0, 11);
    const auto nodes = cluster_nodes(spec);
    const Ipv4 leader = find_node(nodes, resolved_primary_storage(spec)).ip;
    std::size_t heartbeats = 0, acks = 0;
    for (const auto& r : t) {
      if (r.label != Label::RAFT) continue;
      if (r.src_ip == leader) {
        ++heartbeats;
        CHECK(r.payload_len == spec.sizes.raft_heartbeat);
      } else {
        ++acks;
        CHECK(r.dst_ip == leader);
      }
    }
    CHECK(heartbeats == 60 * 3);
    CHECK(acks == 60 * 3);
  }

  TEST_CASE("identical inputs give identical traces") {
    const ClusterSpec spec = testing::wan_cluster(2);
    const std::vector<ScenarioEvent> ev{{ScenarioEvent::Kind::disconnect_node, "st1-1", 20.0}};
    CHECK(simulate_control(spec, ev, 60.0, 5) == simulate_control(spec, ev, 60.0, 5));
    CHECK(simulate_control(spec, ev, 60.0, 5) != simulate_control(spec, ev, 60.0, 6));
    CHECK(simulate_background(BackgroundProfile::streaming, 60.0, 3) ==
          simulate_background(BackgroundProfile::streaming, 60.0, 3));
  }

  TEST_CASE("primary sends at least twice as much as any secondary") {
    for (int storages : {3, 4, 6, 12}) {
      ClusterSpec spec;
      spec.sites.push_back({1, storages, 3, 2});
      const Trace t = simulate_control(spec, {}, 120.0, static_cast<std::uint64_t>(storages));
      const auto nodes = cluster_nodes(spec);
      const Ipv4 leader = find_node(nodes, resolved_primary_storage(spec)).ip;
      const auto raft = sent_by(t, Label::RAFT);
      for (const auto& [ip, n] : raft) {
        if (ip != leader) CHECK(raft.at(leader) >= 2 * n);
      }
      const Ipv4 master = find_node(nodes, resolved_master_controller(spec)).ip;
      const auto of = sent_by(t, Label::OPENFLOW);
      for (const auto& n : nodes) {
        if (n.kind == NodeKind::controller && n.ip != master) CHECK(of.at(master) >= 2 * of.at(n.ip));
      }
    }
  }

  TEST_CASE("leader failover hands the primary pattern to exactly one survivor") {
    const ClusterSpec spec = testing::storage_cluster(4, 0.0);
    const std::vector<ScenarioEvent> ev{{ScenarioEvent::Kind::disconnect_node, "st1-1", 30.0}};
    const Trace t = simulate_control(spec, ev, 120.0, 2);
    const auto nodes = cluster_nodes(spec);
    // Silence after the disconnect.
    for (const auto& r : t) {
      if (r.ts >= 30.0) CHECK(r.src_ip != nodes[0].ip);
    }
    // Vote burst between detection and the end of the election.
    std::size_t votes = 0;
    for (const auto& r : t) {
      if (r.label == Label::RAFT && r.payload_len == spec.sizes.raft_vote) {
        ++votes;
        CHECK(r.ts >= 33.0);
        CHECK(r.ts < 35.1);
      }
    }
    CHECK(votes == 3 * 6 * 2);  // rounds x ordered survivor pairs x (request, reply)
    std::set<Ipv4> heartbeat_sources;
    for (const auto& r : t) {
      if (r.ts >= 36.0 && r.label == Label::RAFT && r.payload_len == spec.sizes.raft_heartbeat) {
        heartbeat_sources.insert(r.src_ip);
      }
    }
    REQUIRE(heartbeat_sources.size() == 1);
    CHECK(*heartbeat_sources.begin() == find_node(nodes, "st1-2").ip);
  }

  TEST_CASE("master failover and reclaim") {
    ClusterSpec spec;
    spec.sites.push_back({1, 1, 3, 2});
    spec.jitter_fraction = 0;
    const std::vector<ScenarioEvent> ev{{ScenarioEvent::Kind::disconnect_node, "ctl1-1", 20.0},
                                        {ScenarioEvent::Kind::reconnect_node, "ctl1-1", 60.0}};
    const Trace t = simulate_control(spec, ev, 100.0, 4);
    const auto nodes = cluster_nodes(spec);
    auto writers = [&](double t0, double t1) {
      std::set<Ipv4> w;
      for (const auto& r : t) {
        if (r.ts >= t0 && r.ts < t1 && r.payload_len == spec.sizes.of_write) w.insert(r.src_ip);
      }
      return w;
    };
    CHECK(writers(0, 20) == std::set<Ipv4>{find_node(nodes, "ctl1-1").ip});
    CHECK(writers(25, 60) == std::set<Ipv4>{find_node(nodes, "ctl1-2").ip});
    CHECK(writers(62, 100) == std::set<Ipv4>{find_node(nodes, "ctl1-1").ip});
  }

  TEST_CASE("Raft flow autocorrelation peaks at the heartbeat interval") {
    ClusterSpec spec = testing::storage_cluster(3);
    spec.raft_heartbeat_interval = 5.0;
    const double duration = 300.0;
    const Trace t = simulate_control(spec, {}, duration, 8);
    const auto nodes = cluster_nodes(spec);
    Trace flow;
    for (const auto& r : t) {
      const bool pair = (r.src_ip == nodes[0].ip && r.dst_ip == nodes[1].ip) ||
                        (r.src_ip == nodes[1].ip && r.dst_ip == nodes[0].ip);
      if (pair && r.label == Label::RAFT) flow.push_back(r);
    }
    const auto x = per_second_counts(flow, duration);
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    double best = -1e9;
    std::size_t best_lag = 0;
    for (std::size_t lag = 1; lag <= x.size() / 2; ++lag) {
      double s = 0;
      for (std::size_t i = 0; i + lag < x.size(); ++i) s += (x[i] - mean) * (x[i + lag] - mean);
      if (s > best) {
        best = s;
        best_lag = lag;
      }
    }
    CHECK(best_lag >= 4);
    CHECK(best_lag <= 6);
  }

  TEST_CASE("zero duration gives an empty trace") {
    CHECK(simulate_control(testing::wan_cluster(1), {}, 0.0, 1).empty());
    for (auto p : {BackgroundProfile::periodic_app, BackgroundProfile::streaming, BackgroundProfile::bulk}) {
      CHECK(simulate_background(p, 0.0, 1).empty());
    }
  }

  TEST_CASE("streaming is burstier than periodic_app") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto s = simulate_background(BackgroundProfile::streaming, 60.0, seed);
      const auto p = simulate_background(BackgroundProfile::periodic_app, 60.0, seed);
      CHECK(variance(per_second_counts(s, 60.0)) > variance(per_second_counts(p, 60.0)));
    }
  }

  TEST_CASE("background is DATA outside the cluster range") {
    for (auto p : {BackgroundProfile::periodic_app, BackgroundProfile::streaming, BackgroundProfile::bulk}) {
      const auto t = simulate_background(p, 30.0, 4, {3});
      REQUIRE_FALSE(t.empty());
      CHECK_NOTHROW(require_sorted(t, "bg"));
      for (const auto& r : t) {
        CHECK(r.label == Label::DATA);
        CHECK((r.src_ip.value() >> 24) != 10);
        CHECK(r.payload_len <= r.total_len);
        CHECK(r.ts < 30.0);
      }
    }
  }

  TEST_CASE("merge_traces") {
    using testing::pkt;
    const Trace a{pkt(0.0, "1.0.0.1", 1, "1.0.0.2", 2), pkt(1.0, "1.0.0.1", 3, "1.0.0.2", 2)};
    const Trace b{pkt(1.0, "2.0.0.1", 1, "2.0.0.2", 2), pkt(2.0, "2.0.0.1", 1, "2.0.0.2", 2)};
    const Trace e;
    CHECK(merge_traces(std::vector<Trace>{a, e}) == a);
    const Trace m = merge_traces(std::vector<Trace>{a, b});
    REQUIRE(m.size() == 4);
    CHECK(m[1] == a[1]);  // equal timestamps keep input order
    CHECK(m[2] == b[0]);

    Trace ten1, ten2;
    for (int i = 0; i < 10; ++i) {
      ten1.push_back(pkt(i * 0.3, "1.0.0.1", 1, "1.0.0.2", 2));
      ten2.push_back(pkt(i * 0.2, "2.0.0.1", 1, "2.0.0.2", 2));
    }
    const Trace m2 = merge_traces(std::vector<Trace>{ten1, ten2});
    CHECK(m2.size() == 20);
    CHECK_NOTHROW(require_sorted(m2, "merged"));
    const Trace bad{pkt(1.0, "1.0.0.1", 1, "1.0.0.2", 2), pkt(0.0, "1.0.0.1", 1, "1.0.0.2", 2)};
    CHECK_THROWS_AS(merge_traces(std::vector<Trace>{bad}), ValidationError);
  }

  TEST_CASE("spec and event validation") {
    ClusterSpec spec = testing::wan_cluster(1);
    const std::vector<ScenarioEvent> unknown{{ScenarioEvent::Kind::disconnect_node, "st9-9", 1.0}};
    CHECK_THROWS_AS(simulate_control(spec, unknown, 10.0, 1), ValidationError);
    const std::vector<ScenarioEvent> late{{ScenarioEvent::Kind::disconnect_node, "st1-1", 11.0}};
    CHECK_THROWS_AS(simulate_control(spec, late, 10.0, 1), ValidationError);

    ClusterSpec wrong = spec;
    wrong.primary_storage = "ctl1-1";
    CHECK_THROWS_AS(validate(wrong), ValidationError);
    wrong = spec;
    wrong.master_controller = "st1-1";
    CHECK_THROWS_AS(validate(wrong), ValidationError);
    wrong = spec;
    wrong.swim_probe_period = 0;
    CHECK_THROWS_AS(validate(wrong), ValidationError);
    wrong = spec;
    wrong.ip_plan["st1-2"] = Ipv4::parse("10.1.1.1");
    CHECK_THROWS_AS(validate(wrong), ValidationError);
  }

  TEST_CASE("ip plan overrides default addressing") {
    ClusterSpec spec = testing::wan_cluster(1);
    spec.ip_plan["st1-1"] = Ipv4::parse("192.0.2.7");
    const auto nodes = cluster_nodes(spec);
    CHECK(find_node(nodes, "st1-1").ip == Ipv4::parse("192.0.2.7"));
    CHECK(find_node(nodes, "ctl1-2").ip == Ipv4::parse("10.1.2.2"));
  }

  TEST_CASE("capture_site keeps packets touching the site") {
    const ClusterSpec spec = testing::wan_cluster(3);
    const Trace t = simulate_control(spec, {}, 20.0, 1);
    const Trace s2 = capture_site(t, spec, 2);
    std::set<Ipv4> site_ips;
    for (const auto& n : cluster_nodes(spec)) {
      if (n.site == 2) site_ips.insert(n.ip);
    }
    std::size_t expected = 0;
    for (const auto& r : t) expected += site_ips.contains(r.src_ip) || site_ips.contains(r.dst_ip);
    CHECK(s2.size() == expected);
    CHECK(s2.size() < t.size());
    CHECK_THROWS_AS(capture_site(t, spec, 9), ValidationError);
  }
}
