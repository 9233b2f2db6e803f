#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lemsim/common.hpp"
#include "lemsim/participant.hpp"

namespace lemsim {

using Bytes = std::vector<std::uint8_t>;

inline const std::string kOperatorId = "LMO";

enum class SignalKind : std::uint8_t { Signal1b = 0x01, Signal3 = 0x03 };

std::string to_string(SignalKind kind);

/// Participant -> operator: the proposed net schedule. Nothing else about the
/// participant's devices is ever put on the bus.
struct OfferPayload {
  ParticipantId participant;
  BusId bus = 0;
  Profile net_kw{};
};

/// Operator -> participant: price at the participant's bus plus the
/// coordination vectors of the consensus iteration.
struct PricePayload {
  BusId bus = 0;
  Profile dlmp{};
  Profile consensus{};
  Profile dual{};
  bool final_round = false;
};

struct SignalEnvelope {
  SignalKind kind = SignalKind::Signal1b;
  std::string sender;
  std::string receiver;
  std::int64_t round = 0;
  std::variant<OfferPayload, PricePayload> payload;
  Bytes integrity_tag;

  const OfferPayload& offer() const { return std::get<OfferPayload>(payload); }
  OfferPayload& offer() { return std::get<OfferPayload>(payload); }
  const PricePayload& prices() const { return std::get<PricePayload>(payload); }
  PricePayload& prices() { return std::get<PricePayload>(payload); }
  /// The participant end of the link (sender of 1b, receiver of 3).
  const std::string& participant_end() const { return kind == SignalKind::Signal1b ? sender : receiver; }
};

/// Field-ordered, length-prefixed serialisation of everything except the tag.
Bytes canonical_bytes(const SignalEnvelope& env);

/// Hex SHA-256 of canonical_bytes.
std::string payload_digest(const SignalEnvelope& env);

/// HMAC-SHA256 over canonical_bytes. Throws InvalidArgument on an empty key.
SignalEnvelope tag_integrity(SignalEnvelope env, const Bytes& key);
bool verify_integrity(const SignalEnvelope& env, const Bytes& key);

SignalEnvelope build_offer(const ParticipantModel& p, const Schedule& s, const Bytes& key, std::int64_t round = 0);

using Interceptor = std::function<std::optional<SignalEnvelope>(SignalEnvelope)>;
using InterceptorChain = std::vector<Interceptor>;

/// Wraps an interceptor so envelopes of any other kind pass untouched.
Interceptor only_kind(SignalKind kind, Interceptor inner);

struct DeliveryLogEntry {
  std::int64_t round = 0;
  SignalKind kind = SignalKind::Signal1b;
  std::string sender;
  std::string receiver;
  std::string pre_digest;
  std::string post_digest;  // empty when dropped
  bool dropped = false;
  bool rejected = false;  // failed verification at the receiver
  bool modified() const { return !dropped && pre_digest != post_digest; }
};

struct RouteResult {
  std::optional<SignalEnvelope> delivered;
  DeliveryLogEntry log;
};

RouteResult route(SignalEnvelope env, const InterceptorChain& chain);

/// Pairwise participant <-> operator keys, derived from the participant id
/// and a seed so runs are reproducible.
class KeyRing {
 public:
  explicit KeyRing(std::uint64_t seed = 0) : seed_(seed) {}
  Bytes key_for(const ParticipantId& participant) const;

 private:
  std::uint64_t seed_;
};

/// In-process bus. submit() may be called concurrently; deliver() routes the
/// pending envelopes in sender order through the interceptor chain and, when
/// enforcement is on, verifies every tag at the receiver. A rejected envelope
/// is logged and replaced by an authenticated retransmission of the original.
class MessageBus {
 public:
  explicit MessageBus(KeyRing keys = KeyRing{}, bool enforce_integrity = false);

  void set_chain(InterceptorChain chain) { chain_ = std::move(chain); }
  void set_enforcement(bool on) { enforce_ = on; }
  bool enforcement() const { return enforce_; }
  const KeyRing& keys() const { return keys_; }
  /// Optional newline-delimited JSON dump of every delivered envelope.
  void set_wire_dump(std::ostream* out) { wire_ = out; }

  void submit(SignalEnvelope env);
  std::vector<SignalEnvelope> deliver();

  const std::vector<DeliveryLogEntry>& log() const { return log_; }
  std::size_t rejected_count() const { return rejected_; }
  std::size_t modified_count() const { return modified_; }

 private:
  KeyRing keys_;
  bool enforce_;
  InterceptorChain chain_;
  std::ostream* wire_ = nullptr;
  std::mutex mutex_;
  std::vector<SignalEnvelope> pending_;
  std::vector<DeliveryLogEntry> log_;
  std::size_t rejected_ = 0;
  std::size_t modified_ = 0;
};

std::string to_ndjson(const SignalEnvelope& env);

}  // namespace lemsim
