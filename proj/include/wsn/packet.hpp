#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "wsn/token.hpp"

namespace wsn {

inline constexpr NodeId kBroadcast = 0xffffffffu;

enum class PacketType : uint8_t {
  Rreq,          // route request flood
  Rrep,          // route reply along the reverse path
  Rerr,          // route error toward affected sources
  RepairNotice,  // broadcast by a node starting a local repair
  Beacon,        // periodic neighbor beacon with power feedback
  Data,          // application payload
};

/// Signal-strength feedback entry carried in beacons: the smoothed power at
/// which the beacon sender hears the named neighbor.
struct RssiFeedback {
  NodeId neighbor = 0;
  double rssi_dbm = 0.0;  // receiver's most recent measurement, unsmoothed
};

/// The single wire format for every frame in the simulator.  Field use by
/// type:
///   Rreq/Rrep   origin, origin_seq, rreq_id, destination, dest_seq,
///               hop_count, accumulated_path, token
///   Rerr        unreachable, token
///   RepairNotice unreachable (destinations under repair), token
///   Beacon      feedback, token
///   Data        origin, data_id, destination, payload_bytes, token,
///               handoff_return when returned upstream for repair
struct Packet {
  PacketType type = PacketType::Data;

  NodeId origin = 0;
  uint32_t origin_seq = 0;
  uint32_t rreq_id = 0;
  NodeId destination = 0;
  uint32_t dest_seq = 0;
  bool dest_seq_known = false;
  uint16_t hop_count = 0;
  std::vector<NodeId> accumulated_path;
  Token token;

  // Data fields.
  uint32_t data_id = 0;
  uint16_t payload_bytes = 0;
  double app_send_time_s = 0.0;
  bool handoff_return = false;
  uint8_t attempts = 0;           // end-to-end delivery attempts consumed
  double airtime_accum_s = 0.0;   // summed per-hop airtimes (delay bound)

  // Rerr / RepairNotice fields.
  std::vector<NodeId> unreachable;

  // Beacon fields.
  std::vector<RssiFeedback> feedback;

  // Link-layer addressing (not counted as payload).
  NodeId mac_src = 0;
  NodeId mac_dst = kBroadcast;

  bool is_broadcast() const { return mac_dst == kBroadcast; }
};

/// Bytes on air for a frame.  The fixed header covers MAC and routing
/// framing; path entries cost four bytes and feedback entries six.
inline size_t frame_bytes(const Packet& p, size_t header_bytes = 34) {
  size_t bytes = header_bytes;
  bytes += 4 * p.accumulated_path.size();
  bytes += 4 * p.unreachable.size();
  bytes += 6 * p.feedback.size();
  if (p.type == PacketType::Data) bytes += p.payload_bytes;
  return bytes;
}

/// Transmission duration for a frame at the given channel rate.
inline double frame_airtime_s(const Packet& p, double data_rate_bps,
                              size_t header_bytes = 34) {
  return static_cast<double>(frame_bytes(p, header_bytes)) * 8.0 /
         data_rate_bps;
}

/// True when the path lists any node more than once (a malformed or looping
/// accumulation that receivers must drop).
inline bool path_has_duplicates(const std::vector<NodeId>& path) {
  for (size_t i = 0; i < path.size(); ++i) {
    for (size_t j = i + 1; j < path.size(); ++j) {
      if (path[i] == path[j]) return true;
    }
  }
  return false;
}

}  // namespace wsn
