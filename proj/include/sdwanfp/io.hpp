#ifndef SDWANFP_IO_HPP
#define SDWANFP_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "sdwanfp/features.hpp"
#include "sdwanfp/trafficsim.hpp"
#include "json.hpp"

namespace sdwanfp {

nlohmann::json to_json(const PacketRecord& r);
PacketRecord record_from_json(const nlohmann::json& j);

/// One record per line, keys ts, src_ip, src_port, dst_ip, dst_port, proto,
/// total_len, payload_len, label.
void write_trace_jsonl(std::ostream& out, const Trace& trace);
/// Throws ValidationError naming the offending line.
Trace read_trace_jsonl(std::istream& in);

nlohmann::json to_json(const SequenceSample& s);
SequenceSample sample_from_json(const nlohmann::json& j);
void write_samples_jsonl(std::ostream& out, const std::vector<SequenceSample>& samples);
std::vector<SequenceSample> read_samples_jsonl(std::istream& in);

nlohmann::json to_json(const ClusterSpec& spec);
ClusterSpec cluster_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioEvent& e);
ScenarioEvent event_from_json(const nlohmann::json& j);

struct PcapStats {
  std::size_t frames = 0;
  std::size_t skipped = 0;  // not IPv4 TCP/UDP, or truncated
};

/// Classic libpcap files (either byte order, micro- or nanosecond stamps)
/// with Ethernet or raw IPv4 link types. Records are labeled UNKNOWN and
/// timestamps are relative to the first TCP/UDP record.
Trace read_pcap(std::istream& in, PcapStats* stats = nullptr);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace sdwanfp

#endif  // SDWANFP_IO_HPP
