#ifndef SDWANFP_TESTS_HELPERS_HPP
#define SDWANFP_TESTS_HELPERS_HPP

#include <string>

#include "sdwanfp/trafficsim.hpp"

namespace testing {

inline sdwanfp::PacketRecord pkt(double ts, const char* src, std::uint16_t sport, const char* dst,
                                 std::uint16_t dport, std::uint32_t total = 100,
                                 std::uint32_t payload = 48,
                                 sdwanfp::Label label = sdwanfp::Label::DATA,
                                 sdwanfp::Proto proto = sdwanfp::Proto::TCP) {
  sdwanfp::PacketRecord r;
  r.ts = ts;
  r.src_ip = sdwanfp::Ipv4::parse(src);
  r.dst_ip = sdwanfp::Ipv4::parse(dst);
  r.src_port = sport;
  r.dst_port = dport;
  r.proto = proto;
  r.total_len = total;
  r.payload_len = payload;
  r.label = label;
  return r;
}

// Single site with only storages; no SWIM peers besides storages, no OpenFlow.
inline sdwanfp::ClusterSpec storage_cluster(int storages, double jitter = 0.05) {
  sdwanfp::ClusterSpec spec;
  spec.sites.push_back({1, storages, 0, 0});
  spec.jitter_fraction = jitter;
  return spec;
}

// `sites` sites of (3 storages, 2 controllers, 1 switch).
inline sdwanfp::ClusterSpec wan_cluster(int sites) {
  sdwanfp::ClusterSpec spec;
  for (int s = 1; s <= sites; ++s) spec.sites.push_back({s, 3, 2, 1});
  return spec;
}

}  // namespace testing

#endif  // SDWANFP_TESTS_HELPERS_HPP
