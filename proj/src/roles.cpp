#include "sdwanfp/roles.hpp"

#include <cmath>

namespace sdwanfp {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::primary: return "primary";
    case Role::secondary: return "secondary";
    default: return "unknown";
  }
}

Role role_from_string(std::string_view s) {
  if (s == "primary") return Role::primary;
  if (s == "secondary") return Role::secondary;
  if (s == "unknown") return Role::unknown;
  throw ValidationError("unknown role: " + std::string(s));
}

namespace {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
};

Moments population_moments(const ZMap& zmap) {
  Moments m;
  if (zmap.empty()) return m;
  const auto n = static_cast<double>(zmap.size());
  for (const auto& [ip, c] : zmap) m.mean += static_cast<double>(c.packets);
  m.mean /= n;
  double ss = 0;
  for (const auto& [ip, c] : zmap) {
    const double d = static_cast<double>(c.packets) - m.mean;
    ss += d * d;
  }
  m.stddev = std::sqrt(ss / n);
  return m;
}

}  // namespace

ZMap zscores_from_counts(const std::map<Ipv4, std::size_t>& counts) {
  if (counts.empty()) throw ValidationError("zscores: no nodes");
  ZMap out;
  for (const auto& [ip, n] : counts) out[ip].packets = n;
  const Moments m = population_moments(out);
  // Relative cutoff so that float noise in the mean does not produce huge z.
  if (m.stddev > 1e-12 * std::max(1.0, m.mean)) {
    for (auto& [ip, c] : out) c.z = (static_cast<double>(c.packets) - m.mean) / m.stddev;
  }
  return out;
}

ZMap zscores(std::span<const Flow> flows) {
  std::map<Ipv4, std::size_t> counts;
  for (const auto& f : flows) {
    for (const auto& p : f.packets) {
      ++counts[p.dir == Direction::forward ? f.initiator : f.responder];
    }
  }
  return zscores_from_counts(counts);
}

std::vector<Ipv4> RoleAssignment::primaries() const {
  std::vector<Ipv4> out;
  for (const auto& e : nodes) {
    if (e.role == Role::primary) out.push_back(e.ip);
  }
  return out;
}

Role RoleAssignment::role_of(Ipv4 ip) const {
  for (const auto& e : nodes) {
    if (e.ip == ip) return e.role;
  }
  return Role::unknown;
}

RoleAssignment infer_roles(const ZMap& zmap, double theta, std::string protocol) {
  RoleAssignment a;
  a.protocol = std::move(protocol);
  a.theta = theta;
  const Moments m = population_moments(zmap);
  a.mean = m.mean;
  a.stddev = m.stddev;
  a.degenerate = zmap.empty() || m.stddev <= 1e-12 * std::max(1.0, m.mean);
  for (const auto& [ip, c] : zmap) {
    a.nodes.push_back({ip, c.packets, c.z, c.z > theta ? Role::primary : Role::secondary});
  }
  return a;
}

nlohmann::json to_json(const RoleAssignment& a) {
  nlohmann::json j;
  j["protocol"] = a.protocol;
  j["theta"] = a.theta;
  j["mean"] = a.mean;
  j["stddev"] = a.stddev;
  j["degenerate"] = a.degenerate;
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (const auto& e : a.nodes) {
    nodes.push_back({{"ip", e.ip.str()},
                     {"packets", e.packets},
                     {"z", e.z},
                     {"role", std::string(to_string(e.role))}});
  }
  return j;
}

}  // namespace sdwanfp
