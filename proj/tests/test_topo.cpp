#include <algorithm>
#include <functional>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "sdwanfp/topo.hpp"

using namespace sdwanfp;

namespace {

Vertex vx(std::uint8_t host, Label p = Label::RAFT, Role r = Role::secondary) {
  return {Ipv4(10, 0, 0, host), p, r};
}

ClusterGraph path_graph(int n) {
  ClusterGraph g;
  for (int i = 0; i < n; ++i) g.add_vertex(vx(static_cast<std::uint8_t>(i + 1)));
  for (int i = 1; i < n; ++i) g.add_edge(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(i));
  return g;
}

// Enumerates every partial injective vertex map from g1 into g2.
std::size_t brute_force_ged(const ClusterGraph& g1, const ClusterGraph& g2) {
  const std::size_t n1 = g1.vertex_count(), n2 = g2.vertex_count();
  std::vector<int> map(n1, -1);
  std::vector<bool> used(n2, false);
  std::size_t best = SIZE_MAX;
  auto cost = [&] {
    std::size_t c = 0, mapped = 0;
    for (std::size_t u = 0; u < n1; ++u) {
      if (map[u] < 0) continue;
      ++mapped;
      const auto& a = g1.vertices()[u];
      const auto& b = g2.vertices()[static_cast<std::size_t>(map[u])];
      if (a.protocol != b.protocol || a.role != b.role) ++c;
    }
    c += (n1 - mapped) + (n2 - mapped);
    std::size_t kept = 0;
    for (const auto& [u, v] : g1.edges()) {
      if (map[u] >= 0 && map[v] >= 0 &&
          g2.has_edge(static_cast<std::size_t>(map[u]), static_cast<std::size_t>(map[v]))) {
        ++kept;
      }
    }
    return c + g1.edge_count() + g2.edge_count() - 2 * kept;
  };
  std::function<void(std::size_t)> rec = [&](std::size_t u) {
    if (u == n1) {
      best = std::min(best, cost());
      return;
    }
    map[u] = -1;
    rec(u + 1);
    for (std::size_t v = 0; v < n2; ++v) {
      if (used[v]) continue;
      used[v] = true;
      map[u] = static_cast<int>(v);
      rec(u + 1);
      used[v] = false;
      map[u] = -1;
    }
  };
  rec(0);
  return best;
}

ClusterGraph random_graph(std::mt19937_64& rng, std::size_t max_vertices) {
  std::uniform_int_distribution<std::size_t> nv(0, max_vertices);
  std::uniform_int_distribution<int> proto(0, 2), role(0, 1);
  std::bernoulli_distribution edge(0.4);
  const Label labels[] = {Label::RAFT, Label::SWIM, Label::OPENFLOW};
  ClusterGraph g;
  const std::size_t n = nv(rng);
  for (std::size_t i = 0; i < n; ++i) {
    g.add_vertex({Ipv4(10, 0, 0, static_cast<std::uint8_t>(i + 1)), labels[proto(rng)],
                  role(rng) ? Role::primary : Role::secondary});
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (edge(rng)) g.add_edge(a, b);
    }
  }
  return g;
}

}  // namespace

TEST_SUITE("topo") {
  TEST_CASE("graph edges are simple and undirected") {
    ClusterGraph g;
    g.add_vertex(vx(1));
    g.add_vertex(vx(2));
    g.add_edge(1, 0);
    g.add_edge(0, 1);
    CHECK(g.edge_count() == 1);
    CHECK(g.has_edge(0, 1));
    CHECK(g.has_edge(1, 0));
    CHECK_THROWS_AS(g.add_edge(0, 0), ValidationError);
    CHECK_THROWS_AS(g.add_edge(0, 5), ValidationError);
  }

  TEST_CASE("Raft star of four storages") {
    Trace t;
    double ts = 0;
    for (int round = 0; round < 10; ++round) {
      for (const char* follower : {"10.0.0.2", "10.0.0.3", "10.0.0.4"}) {
        t.push_back(testing::pkt(ts += 0.01, "10.0.0.1", 40000, follower, 5679, 100, 48, Label::RAFT));
        t.push_back(testing::pkt(ts += 0.01, follower, 5679, "10.0.0.1", 40000, 80, 28, Label::RAFT));
      }
    }
    // Follower-to-follower chatter of one packet is below the edge floor.
    t.push_back(testing::pkt(ts += 0.01, "10.0.0.2", 41000, "10.0.0.3", 5679, 80, 28, Label::RAFT));
    const auto flows = assemble_flows_5tuple(t);
    const std::vector<Label> protocols(flows.size(), Label::RAFT);
    std::map<Label, RoleAssignment> roles;
    roles[Label::RAFT] = infer_roles(zscores(flows), 1.0, "RAFT");
    const auto g = build_graph(flows, protocols, roles, {.min_edge_packets = 2});
    REQUIRE(g.vertex_count() == 4);
    CHECK(g.edge_count() == 3);
    CHECK(g.vertices()[0].ip == Ipv4(10, 0, 0, 1));
    CHECK(g.vertices()[0].role == Role::primary);
    for (std::size_t i = 1; i < 4; ++i) {
      CHECK(g.vertices()[i].role == Role::secondary);
      CHECK(g.has_edge(0, i));
    }

    const auto loose = build_graph(flows, protocols, roles);
    CHECK(loose.edge_count() == 4);
    CHECK_THROWS_AS(build_graph(flows, std::vector<Label>{}, roles), ValidationError);
  }

  TEST_CASE("flows labeled data or unknown are ignored") {
    Trace t{testing::pkt(0.0, "10.0.0.1", 1, "10.0.0.2", 2),
            testing::pkt(0.1, "10.0.0.1", 3, "10.0.0.2", 4, 100, 48, Label::SWIM)};
    const auto flows = assemble_flows_5tuple(t);
    const std::vector<Label> protocols{Label::DATA, Label::SWIM};
    const auto g = build_graph(flows, protocols, {});
    CHECK(g.vertex_count() == 2);
    CHECK(g.vertices()[0].protocol == Label::SWIM);
    CHECK(g.vertices()[0].role == Role::unknown);
  }

  TEST_CASE("edit distance examples") {
    const ClusterGraph empty;
    CHECK(ged(empty, empty).distance == 0);
    const auto p3 = path_graph(3);
    CHECK(ged(p3, p3).distance == 0);
    CHECK(ged(p3, empty).distance == 5);
    CHECK(ged(empty, p3).distance == 5);

    auto more = p3;
    more.add_vertex(vx(9));
    more.add_edge(2, 3);
    CHECK(ged(p3, more).distance == 2);

    auto relabeled = p3;
    ClusterGraph r;
    r.add_vertex(vx(1, Label::RAFT, Role::primary));
    r.add_vertex(vx(2));
    r.add_vertex(vx(3));
    r.add_edge(0, 1);
    r.add_edge(1, 2);
    CHECK(ged(p3, r).distance == 1);

    ClusterGraph triangle = path_graph(3);
    triangle.add_edge(0, 2);
    CHECK(ged(p3, triangle).distance == 1);
  }

  TEST_CASE("exact search matches brute force on small random graphs") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 60; ++i) {
      const auto a = random_graph(rng, 5);
      const auto b = random_graph(rng, 5);
      const auto r = ged(a, b);
      CHECK(r.exact);
      CHECK(r.distance == brute_force_ged(a, b));
      CHECK(ged(b, a).distance == r.distance);
    }
  }

  TEST_CASE("greedy bound is flagged and never below the exact value") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 10; ++i) {
      const auto a = random_graph(rng, 7);
      const auto b = random_graph(rng, 7);
      const auto exact = ged(a, b);
      const auto bound = ged(a, b, {.exact_vertex_limit = 0});
      CHECK_FALSE(bound.exact);
      CHECK(bound.distance >= exact.distance);
      CHECK(ged(a, a, {.exact_vertex_limit = 0}).distance == 0);
    }
  }

  TEST_CASE("similarity examples") {
    const auto p3 = path_graph(3);
    const auto same = similarity(p3, p3);
    CHECK(same.sim == 1.0);
    CHECK(same.denominator == 10);

    auto more = p3;
    more.add_vertex(vx(9));
    more.add_edge(2, 3);
    const auto s = similarity(p3, more);
    CHECK(s.ged == 2);
    CHECK(s.denominator == 12);
    CHECK(s.sim == doctest::Approx(1.0 - 2.0 / 12).epsilon(1e-15));
    CHECK(similarity(more, p3).sim == s.sim);

    CHECK(similarity(ClusterGraph{}, ClusterGraph{}).sim == 1.0);
    CHECK(similarity(p3, ClusterGraph{}).sim == 0.0);
  }

  TEST_CASE("similarity decreases as edges are removed") {
    auto g = path_graph(6);
    for (std::size_t a = 0; a < 6; ++a) {
      for (std::size_t b = a + 2; b < 6; b += 2) g.add_edge(a, b);
    }
    double last = 1.0;
    std::vector<std::pair<std::size_t, std::size_t>> kept(g.edges());
    while (!kept.empty()) {
      kept.pop_back();
      ClusterGraph k;
      for (const auto& v : g.vertices()) k.add_vertex(v);
      for (const auto& [a, b] : kept) k.add_edge(a, b);
      const double sim = similarity(g, k).sim;
      CHECK(sim < last);
      last = sim;
    }
  }

  TEST_CASE("JSON round trip and DOT") {
    ClusterGraph g;
    g.add_vertex(vx(1, Label::RAFT, Role::primary));
    g.add_vertex(vx(2, Label::SWIM));
    g.add_vertex(vx(3, Label::OPENFLOW, Role::unknown));
    g.add_edge(0, 2);
    const auto back = graph_from_json(nlohmann::json::parse(to_json(g).dump()));
    CHECK(back == g);

    auto bad = to_json(g);
    bad["vertices"][0]["protocol"] = "DATA";
    CHECK_THROWS_AS(graph_from_json(bad), ValidationError);

    const auto dot = to_dot(g);
    CHECK(dot.rfind("graph control_plane {", 0) == 0);
    CHECK(dot.find("v0 -- v2;") != std::string::npos);
    CHECK(dot.find("style=bold") != std::string::npos);
  }
}
