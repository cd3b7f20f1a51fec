#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "sdwanfp/flowproc.hpp"

using namespace sdwanfp;
using testing::pkt;

TEST_SUITE("core") {
  TEST_CASE("ipv4 parse and print round trip") {
    CHECK(Ipv4::parse("10.1.2.3").str() == "10.1.2.3");
    CHECK(Ipv4::parse("10.1.2.3") == Ipv4(10, 1, 2, 3));
    CHECK(Ipv4::parse("9.255.255.255") < Ipv4::parse("10.0.0.0"));
    CHECK_THROWS_AS(Ipv4::parse("10.1.2"), ValidationError);
    CHECK_THROWS_AS(Ipv4::parse("10.1.2.256"), ValidationError);
    CHECK_THROWS_AS(Ipv4::parse("a.b.c.d"), ValidationError);
  }

  TEST_CASE("label and proto names") {
    for (Label l : {Label::RAFT, Label::SWIM, Label::OPENFLOW, Label::DATA, Label::UNKNOWN}) {
      CHECK(label_from_string(to_string(l)) == l);
    }
    CHECK(proto_from_string("UDP") == Proto::UDP);
    CHECK_THROWS_AS(label_from_string("HTTP"), ValidationError);
  }

  TEST_CASE("require_sorted rejects decreasing timestamps") {
    Trace t{pkt(1.0, "1.1.1.1", 1, "2.2.2.2", 2), pkt(0.5, "1.1.1.1", 1, "2.2.2.2", 2)};
    CHECK_THROWS_AS(require_sorted(t, "x"), ValidationError);
    std::swap(t[0], t[1]);
    CHECK_NOTHROW(require_sorted(t, "x"));
  }
}

TEST_SUITE("flowproc") {
  TEST_CASE("empty trace gives no flows") {
    CHECK(assemble_flows_2tuple({}).empty());
    CHECK(assemble_flows_5tuple({}).empty());
  }

  TEST_CASE("two-tuple assembly and directions") {
    const Trace t{pkt(0.0, "10.0.0.1", 1000, "10.0.0.2", 80),
                  pkt(0.1, "10.0.0.2", 80, "10.0.0.1", 1000),
                  pkt(0.2, "10.0.0.1", 1001, "10.0.0.3", 80)};
    const auto flows = assemble_flows_2tuple(t);
    REQUIRE(flows.size() == 2);
    CHECK(std::get<FlowKey2>(flows[0].key).ip_b == Ipv4::parse("10.0.0.2"));
    CHECK(flows[0].initiator == Ipv4::parse("10.0.0.1"));
    REQUIRE(flows[0].packets.size() == 2);
    CHECK(flows[0].packets[0].dir == Direction::forward);
    CHECK(flows[0].packets[1].dir == Direction::backward);
    REQUIRE(flows[1].packets.size() == 1);
    CHECK(flows[1].packets[0].dir == Direction::forward);
  }

  TEST_CASE("five-tuple keys separate port pairs and protocols") {
    const Trace t{pkt(0.0, "10.0.0.1", 1000, "10.0.0.2", 80),
                  pkt(0.1, "10.0.0.1", 1001, "10.0.0.2", 80),
                  pkt(0.2, "10.0.0.1", 1000, "10.0.0.2", 80, 100, 48, Label::DATA, Proto::UDP)};
    const auto flows = assemble_flows_5tuple(t);
    CHECK(flows.size() == 3);
    const Trace same{pkt(0.0, "10.0.0.1", 1000, "10.0.0.2", 80),
                     pkt(0.1, "10.0.0.2", 80, "10.0.0.1", 1000)};
    const auto one = assemble_flows_5tuple(same);
    REQUIRE(one.size() == 1);
    CHECK(one[0].packets[1].dir == Direction::backward);
  }

  TEST_CASE("unsorted input is rejected") {
    const Trace t{pkt(1.0, "10.0.0.1", 1, "10.0.0.2", 2), pkt(0.0, "10.0.0.1", 1, "10.0.0.2", 2)};
    CHECK_THROWS_AS(assemble_flows_2tuple(t), ValidationError);
    CHECK_THROWS_AS(assemble_flows_5tuple(t), ValidationError);
  }

  TEST_CASE("packet conservation and direction flip on a random trace") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> host(1, 12), port(1000, 1010);
    Trace t;
    for (int i = 0; i < 1000; ++i) {
      const std::string a = "10.0.0." + std::to_string(host(rng));
      std::string b = "10.0.0." + std::to_string(host(rng));
      if (a == b) b = "10.0.1.1";
      t.push_back(pkt(i * 0.01, a.c_str(), static_cast<std::uint16_t>(port(rng)), b.c_str(),
                      static_cast<std::uint16_t>(port(rng))));
    }
    for (auto assemble : {&assemble_flows_2tuple, &assemble_flows_5tuple}) {
      const auto flows = assemble(t);
      std::size_t n = 0;
      for (const auto& f : flows) n += f.packets.size();
      CHECK(n == 1000);

      Trace flipped = t;
      for (auto& r : flipped) {
        std::swap(r.src_ip, r.dst_ip);
        std::swap(r.src_port, r.dst_port);
      }
      const auto ff = assemble(flipped);
      REQUIRE(ff.size() == flows.size());
      for (std::size_t i = 0; i < flows.size(); ++i) {
        CHECK(ff[i].key == flows[i].key);
        // The first packet's source is the initiator, so flipping every
        // packet swaps initiator and responder; flags stay relative to it.
        CHECK(ff[i].initiator == flows[i].responder);
        CHECK(ff[i].responder == flows[i].initiator);
        for (std::size_t p = 0; p < flows[i].packets.size(); ++p) {
          CHECK(ff[i].packets[p].dir == flows[i].packets[p].dir);
        }
      }
    }
  }

  TEST_CASE("count_sessions") {
    const Trace t{pkt(0.0, "10.0.0.1", 1000, "10.0.0.2", 80),
                  pkt(0.5, "10.0.0.2", 80, "10.0.0.1", 1000),
                  pkt(0.7, "10.0.0.1", 1000, "10.0.0.2", 80)};
    const auto a = Ipv4::parse("10.0.0.1"), b = Ipv4::parse("10.0.0.2");
    CHECK(count_sessions(t, a, b, 0.0, 1.0) == 1);
    CHECK(count_sessions(t, a, b, 2.0, 3.0) == 0);
    CHECK(count_sessions(t, a, Ipv4::parse("10.0.0.3"), 0.0, 1.0) == 0);
  }

  TEST_CASE("SWIM probes open one session each") {
    ClusterSpec spec = testing::storage_cluster(2);
    const Trace t = simulate_control(spec, {}, 10.0, 3);
    const auto nodes = cluster_nodes(spec);
    // Independent count: distinct SWIM 5-tuples between the two storages.
    std::set<std::tuple<std::uint32_t, std::uint16_t, std::uint32_t, std::uint16_t>> swim;
    for (const auto& r : t) {
      if (r.label != Label::SWIM) continue;
      auto a = std::make_tuple(r.src_ip.value(), r.src_port, r.dst_ip.value(), r.dst_port);
      auto b = std::make_tuple(r.dst_ip.value(), r.dst_port, r.src_ip.value(), r.src_port);
      swim.insert(std::min(a, b));
    }
    // Two members, one probe each per second, 10 s.
    CHECK(swim.size() == 20);
    const std::size_t raft_sessions = 1;
    CHECK(count_sessions(t, nodes[0].ip, nodes[1].ip, 0.0, 10.0) == swim.size() + raft_sessions);
  }

  TEST_CASE("windowize: 100 s flow in 50 s windows") {
    Flow f;
    f.key = FlowKey2{};
    for (int i = 0; i <= 99; ++i) f.packets.push_back({static_cast<double>(i) + 0.25});
    const auto w = windowize(f, 50.0, 50);
    CHECK(w.size() == 2);
    f.packets.push_back({100.25});
    CHECK(windowize(f, 50.0, 50).size() == 3);
  }

  TEST_CASE("windowize: 1 Hz packets fill each bin once, empty bins present") {
    Flow f;
    f.key = FlowKey2{};
    for (int i = 0; i < 60; ++i) f.packets.push_back({3.0 + i});
    const auto w = windowize(f, 50.0, 50);
    REQUIRE(w.size() == 2);
    for (const auto& bin : w[0].bins) CHECK(bin.size() == 1);
    REQUIRE(w[1].bins.size() == 50);
    CHECK(w[1].packet_count() == 10);
    CHECK(w[1].bins[20].empty());
    CHECK(windowize(Flow{}, 50.0, 50).empty());
    CHECK_THROWS_AS(windowize(f, 0.0, 50), ValidationError);
    CHECK_THROWS_AS(windowize(f, 50.0, 0), ValidationError);
  }

  TEST_CASE("windowize assigns every packet exactly once") {
    Flow f;
    f.key = FlowKey2{};
    std::mt19937_64 rng(9);
    std::exponential_distribution<double> gap(3.0);
    double ts = 0;
    for (int i = 0; i < 500; ++i) f.packets.push_back({ts += gap(rng)});
    const auto w = windowize(f, 7.0, 13);
    std::vector<int> seen(f.packets.size(), 0);
    for (const auto& win : w) {
      for (std::size_t b = 0; b < win.bins.size(); ++b) {
        for (std::size_t i : win.bins[b]) {
          ++seen[i];
          CHECK(f.packets[i].ts >= win.start + b * win.bin_secs - 1e-9);
          CHECK(f.packets[i].ts < win.start + (b + 1) * win.bin_secs + 1e-9);
        }
      }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
  }
}
