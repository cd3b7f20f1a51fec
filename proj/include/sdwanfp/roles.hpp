#ifndef SDWANFP_ROLES_HPP
#define SDWANFP_ROLES_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sdwanfp/flowproc.hpp"
#include "json.hpp"

namespace sdwanfp {

enum class Role : std::uint8_t { primary, secondary, unknown };

std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

// Default thresholds for the consensus (storage) and southbound
// (controller) protocol families.
inline constexpr double kConsensusTheta = 3.0;
inline constexpr double kSouthboundTheta = 2.0;

struct NodeCount {
  std::size_t packets = 0;
  double z = 0.0;
};

using ZMap = std::map<Ipv4, NodeCount>;

/// Packets transmitted per source IP across the flows, standardized with the
/// population mean and std. All z are 0 when every count is equal.
ZMap zscores(std::span<const Flow> flows);
ZMap zscores_from_counts(const std::map<Ipv4, std::size_t>& counts);

struct RoleAssignment {
  struct Entry {
    Ipv4 ip;
    std::size_t packets = 0;
    double z = 0.0;
    Role role = Role::secondary;
  };

  std::string protocol;  // free-form tag carried into the JSON output
  std::vector<Entry> nodes;  // ascending IP
  double mean = 0.0;
  double stddev = 0.0;
  double theta = 0.0;
  bool degenerate = false;  // stddev == 0

  std::vector<Ipv4> primaries() const;
  Role role_of(Ipv4 ip) const;  // unknown for IPs not scored
};

/// primary iff z > theta. Zero or several primaries are reported as-is.
RoleAssignment infer_roles(const ZMap& zmap, double theta, std::string protocol = {});

nlohmann::json to_json(const RoleAssignment& a);

}  // namespace sdwanfp

#endif  // SDWANFP_ROLES_HPP
