#include "sdwanfp/core.hpp"

#include <charconv>

namespace sdwanfp {

Ipv4 Ipv4::parse(std::string_view text) {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    unsigned part = 0;
    auto [next, ec] = std::from_chars(p, end, part);
    if (ec != std::errc{} || next == p || part > 255) {
      throw ValidationError("invalid IPv4 address: " + std::string(text));
    }
    value = (value << 8) | part;
    p = next;
    if (octet < 3) {
      if (p == end || *p != '.') {
        throw ValidationError("invalid IPv4 address: " + std::string(text));
      }
      ++p;
    }
  }
  if (p != end) throw ValidationError("invalid IPv4 address: " + std::string(text));
  return Ipv4(value);
}

std::string Ipv4::str() const {
  return std::to_string(value_ >> 24) + '.' + std::to_string((value_ >> 16) & 0xff) + '.' +
         std::to_string((value_ >> 8) & 0xff) + '.' + std::to_string(value_ & 0xff);
}

std::string_view to_string(Proto p) { return p == Proto::TCP ? "TCP" : "UDP"; }

std::string_view to_string(Label l) {
  switch (l) {
    case Label::RAFT: return "RAFT";
    case Label::SWIM: return "SWIM";
    case Label::OPENFLOW: return "OPENFLOW";
    case Label::DATA: return "DATA";
    case Label::UNKNOWN: return "UNKNOWN";
  }
  return "UNKNOWN";
}

Proto proto_from_string(std::string_view s) {
  if (s == "TCP") return Proto::TCP;
  if (s == "UDP") return Proto::UDP;
  throw ValidationError("unknown proto: " + std::string(s));
}

Label label_from_string(std::string_view s) {
  if (s == "RAFT") return Label::RAFT;
  if (s == "SWIM") return Label::SWIM;
  if (s == "OPENFLOW") return Label::OPENFLOW;
  if (s == "DATA") return Label::DATA;
  if (s == "UNKNOWN") return Label::UNKNOWN;
  throw ValidationError("unknown label: " + std::string(s));
}

void require_sorted(const Trace& trace, std::string_view what) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i].ts < trace[i - 1].ts) {
      throw ValidationError(std::string(what) + ": trace not sorted by timestamp at record " +
                            std::to_string(i));
    }
  }
}

}  // namespace sdwanfp
