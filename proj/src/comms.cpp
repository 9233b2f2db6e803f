#include "lemsim/comms.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <tuple>
#include <ostream>

#include "json.hpp"

namespace lemsim {

std::string to_string(SignalKind kind) { return kind == SignalKind::Signal1b ? "Signal1b" : "Signal3"; }

namespace {

class Writer {
 public:
  void field(const void* data, std::size_t n) {
    put_u32(static_cast<std::uint32_t>(n));
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void str(const std::string& s) { field(s.data(), s.size()); }
  void i64(std::int64_t v) {
    std::uint8_t b[8];
    le(static_cast<std::uint64_t>(v), b);
    field(b, 8);
  }
  void byte(std::uint8_t v) { field(&v, 1); }
  void profile(const Profile& p) {
    std::uint8_t b[8 * kHours];
    for (int h = 0; h < kHours; ++h) le(std::bit_cast<std::uint64_t>(p[h]), b + 8 * h);
    field(b, sizeof b);
  }
  Bytes take() { return std::move(out_); }

 private:
  static void le(std::uint64_t v, std::uint8_t* b) {
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
  void put_u32(std::uint32_t n) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  }
  Bytes out_;
};

std::string hex(const std::uint8_t* p, std::size_t n) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    s.push_back(digits[p[i] >> 4]);
    s.push_back(digits[p[i] & 0xf]);
  }
  return s;
}

Bytes hmac(const Bytes& key, const Bytes& msg) {
  Bytes out(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), msg.data(), msg.size(), out.data(), &len);
  out.resize(len);
  return out;
}

}  // namespace

Bytes canonical_bytes(const SignalEnvelope& env) {
  Writer w;
  w.byte(static_cast<std::uint8_t>(env.kind));
  w.str(env.sender);
  w.str(env.receiver);
  w.i64(env.round);
  if (env.kind == SignalKind::Signal1b) {
    const auto& o = env.offer();
    w.str(o.participant);
    w.i64(o.bus);
    w.profile(o.net_kw);
  } else {
    const auto& p = env.prices();
    w.i64(p.bus);
    w.profile(p.dlmp);
    w.profile(p.consensus);
    w.profile(p.dual);
    w.byte(p.final_round ? 1 : 0);
  }
  return w.take();
}

std::string payload_digest(const SignalEnvelope& env) {
  const Bytes b = canonical_bytes(env);
  std::uint8_t md[SHA256_DIGEST_LENGTH];
  SHA256(b.data(), b.size(), md);
  return hex(md, sizeof md);
}

SignalEnvelope tag_integrity(SignalEnvelope env, const Bytes& key) {
  if (key.empty()) throw Error(ErrorKind::InvalidArgument, "integrity key must be non-empty");
  env.integrity_tag = hmac(key, canonical_bytes(env));
  return env;
}

bool verify_integrity(const SignalEnvelope& env, const Bytes& key) {
  if (key.empty() || env.integrity_tag.size() != SHA256_DIGEST_LENGTH) return false;
  const Bytes expected = hmac(key, canonical_bytes(env));
  return CRYPTO_memcmp(expected.data(), env.integrity_tag.data(), expected.size()) == 0;
}

SignalEnvelope build_offer(const ParticipantModel& p, const Schedule& s, const Bytes& key, std::int64_t round) {
  SignalEnvelope env;
  env.kind = SignalKind::Signal1b;
  env.sender = p.id;
  env.receiver = kOperatorId;
  env.round = round;
  env.payload = OfferPayload{p.id, p.bus, s.net_kw};
  return tag_integrity(std::move(env), key);
}

Interceptor only_kind(SignalKind kind, Interceptor inner) {
  return [kind, inner = std::move(inner)](SignalEnvelope env) -> std::optional<SignalEnvelope> {
    if (env.kind != kind) return env;
    return inner(std::move(env));
  };
}

RouteResult route(SignalEnvelope env, const InterceptorChain& chain) {
  RouteResult r;
  r.log.round = env.round;
  r.log.kind = env.kind;
  r.log.sender = env.sender;
  r.log.receiver = env.receiver;
  r.log.pre_digest = payload_digest(env);
  std::optional<SignalEnvelope> cur(std::move(env));
  for (const auto& hook : chain) {
    cur = hook(std::move(*cur));
    if (!cur) {
      r.log.dropped = true;
      return r;
    }
  }
  r.log.post_digest = payload_digest(*cur);
  r.delivered = std::move(cur);
  return r;
}

Bytes KeyRing::key_for(const ParticipantId& participant) const {
  Bytes seed(8);
  for (int i = 0; i < 8; ++i) seed[i] = static_cast<std::uint8_t>(seed_ >> (8 * i));
  return hmac(seed, Bytes(participant.begin(), participant.end()));
}

MessageBus::MessageBus(KeyRing keys, bool enforce_integrity) : keys_(keys), enforce_(enforce_integrity) {}

void MessageBus::submit(SignalEnvelope env) {
  std::lock_guard lock(mutex_);
  pending_.push_back(std::move(env));
}

std::vector<SignalEnvelope> MessageBus::deliver() {
  std::vector<SignalEnvelope> batch;
  {
    std::lock_guard lock(mutex_);
    batch.swap(pending_);
  }
  std::stable_sort(batch.begin(), batch.end(), [](const SignalEnvelope& a, const SignalEnvelope& b) {
    return std::tie(a.sender, a.receiver) < std::tie(b.sender, b.receiver);
  });
  std::vector<SignalEnvelope> out;
  out.reserve(batch.size());
  for (auto& env : batch) {
    SignalEnvelope original = env;
    auto r = route(std::move(env), chain_);
    if (r.log.modified()) ++modified_;
    if (r.delivered && enforce_ && !verify_integrity(*r.delivered, keys_.key_for(r.delivered->participant_end()))) {
      r.log.rejected = true;
      ++rejected_;
      r.delivered = std::move(original);
    }
    if (r.delivered) {
      if (wire_) *wire_ << to_ndjson(*r.delivered) << '\n';
      out.push_back(std::move(*r.delivered));
    }
    log_.push_back(std::move(r.log));
  }
  return out;
}

std::string to_ndjson(const SignalEnvelope& env) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(env.kind);
  j["sender"] = env.sender;
  j["receiver"] = env.receiver;
  j["round"] = env.round;
  if (env.kind == SignalKind::Signal1b) {
    const auto& o = env.offer();
    j["participant"] = o.participant;
    j["bus"] = o.bus;
    j["net_kw"] = o.net_kw;
  } else {
    const auto& p = env.prices();
    j["bus"] = p.bus;
    j["dlmp"] = p.dlmp;
    j["consensus"] = p.consensus;
    j["dual"] = p.dual;
    j["final"] = p.final_round;
  }
  j["tag"] = hex(env.integrity_tag.data(), env.integrity_tag.size());
  return j.dump();
}

}  // namespace lemsim
