#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace wsn {

using NodeId = uint32_t;

enum class TokenStatus : uint8_t { Green, Red };

/// Per-node participation token: an immutable node id plus a one-way status
/// flag.  Every packet carries its sender's token; a red token bars the node
/// from originating, forwarding, and appearing in routes.
struct Token {
  NodeId node_id = 0;
  TokenStatus status = TokenStatus::Green;
};

/// Authoritative token table for a run.  Status only ever moves green to red
/// (conviction); there is no rehabilitation within a run.
class TokenRegistry {
 public:
  explicit TokenRegistry(size_t node_count)
      : status_(node_count, TokenStatus::Green) {}

  bool is_green(NodeId id) const {
    return id < status_.size() && status_[id] == TokenStatus::Green;
  }

  /// Flip a node red.  Returns true when the call changed the status,
  /// false when the node was already red (idempotent).
  bool convict(NodeId id) {
    if (id >= status_.size() || status_[id] == TokenStatus::Red) return false;
    status_[id] = TokenStatus::Red;
    ++red_count_;
    return true;
  }

  Token token_of(NodeId id) const {
    return {id, id < status_.size() ? status_[id] : TokenStatus::Red};
  }

  size_t red_count() const { return red_count_; }
  size_t size() const { return status_.size(); }

 private:
  std::vector<TokenStatus> status_;
  size_t red_count_ = 0;
};

/// One umpire's verdict about a watched forwarder.
enum class UmpireVote : uint8_t { Honest, Misbehave, NoObservation };

/// A watched forwarder either retransmitted the expected packet within the
/// window (honest) or it did not (misbehave).  `overheard` is what this
/// umpire's radio actually decoded from the forwarder, if anything.
inline UmpireVote umpire_observe(uint32_t expected_data_id,
                                 bool heard_retransmission,
                                 bool matched_data_id) {
  (void)expected_data_id;
  if (!heard_retransmission) return UmpireVote::Misbehave;
  return matched_data_id ? UmpireVote::Honest : UmpireVote::Misbehave;
}

/// Majority rule for a verdict panel: two matching misbehave votes convict a
/// full three-umpire panel; smaller panels must be unanimous.
inline bool panel_convicts(int misbehave_votes, int panel_size) {
  if (panel_size <= 0) return false;
  const int needed = panel_size >= 3 ? 2 : panel_size;
  return misbehave_votes >= needed;
}

}  // namespace wsn
