// Copyright 2026 The vnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

// Binary proof transcript and challenge derivation.
//
// Wire layout (all integers little-endian):
//   "SFNT" | version u16 | modulus id u8 | challenge mode u8 | shape digest [32]
//   | phase count u32 | phases...
// Each phase is: kind u8 | element count u32 | elements (8 or 16 bytes each, canonical).

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vnn/errors.hpp"
#include "vnn/field.hpp"
#include "vnn/sha256.hpp"
#include "vnn/sumcheck.hpp"

namespace vnn {

enum class ChallengeMode : std::uint8_t { kFiatShamir = 0, kInteractive = 1 };

inline constexpr std::array<std::uint8_t, 4> kTranscriptMagic{'S', 'F', 'N', 'T'};
inline constexpr std::uint16_t kTranscriptVersion = 1;

inline std::size_t element_bytes(ModulusId id) { return id == ModulusId::kM61 ? 8 : 16; }

struct TranscriptHeader {
  static constexpr std::size_t kSize = 4 + 2 + 1 + 1 + 32;

  std::uint16_t version = kTranscriptVersion;
  ModulusId modulus = ModulusId::kM61;
  ChallengeMode mode = ChallengeMode::kFiatShamir;
  Digest shape_digest{};

  std::array<std::uint8_t, kSize> bytes() const {
    std::array<std::uint8_t, kSize> out{};
    std::copy(kTranscriptMagic.begin(), kTranscriptMagic.end(), out.begin());
    out[4] = static_cast<std::uint8_t>(version & 0xff);
    out[5] = static_cast<std::uint8_t>(version >> 8);
    out[6] = static_cast<std::uint8_t>(modulus);
    out[7] = static_cast<std::uint8_t>(mode);
    std::copy(shape_digest.begin(), shape_digest.end(), out.begin() + 8);
    return out;
  }

  friend bool operator==(const TranscriptHeader&, const TranscriptHeader&) = default;
};

struct TranscriptPhase {
  PhaseKind kind = PhaseKind::kSumcheck;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const TranscriptPhase&, const TranscriptPhase&) = default;
};

/// Closed-form byte length of a transcript with the given per-phase element counts.
inline std::size_t transcript_byte_size(std::span<const std::size_t> phase_elements, ModulusId modulus) {
  std::size_t total = TranscriptHeader::kSize + 4;
  for (std::size_t n : phase_elements) total += 1 + 4 + n * element_bytes(modulus);
  return total;
}

class ProofTranscript {
 public:
  ProofTranscript() = default;
  explicit ProofTranscript(TranscriptHeader header) : header_(header) {}

  const TranscriptHeader& header() const { return header_; }
  const std::vector<TranscriptPhase>& phases() const { return phases_; }
  std::vector<TranscriptPhase>& phases() { return phases_; }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& p : phases_) n += p.payload.size() / element_bytes(header_.modulus);
    return n;
  }

  std::size_t byte_size() const {
    std::size_t total = TranscriptHeader::kSize + 4;
    for (const auto& p : phases_) total += 1 + 4 + p.payload.size();
    return total;
  }

  std::vector<std::uint8_t> serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(byte_size());
    const auto h = header_.bytes();
    out.insert(out.end(), h.begin(), h.end());
    put_u32(out, static_cast<std::uint32_t>(phases_.size()));
    const std::size_t eb = element_bytes(header_.modulus);
    for (const auto& p : phases_) {
      out.push_back(static_cast<std::uint8_t>(p.kind));
      put_u32(out, static_cast<std::uint32_t>(p.payload.size() / eb));
      out.insert(out.end(), p.payload.begin(), p.payload.end());
    }
    return out;
  }

  /// Structural parse: framing, magic, version, ids. Canonical-element checks happen
  /// when the verifier decodes each element.
  static ProofTranscript parse(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
      if (bytes.size() - pos < n) throw MalformedTranscript("truncated transcript");
    };
    need(TranscriptHeader::kSize + 4);
    if (!std::equal(kTranscriptMagic.begin(), kTranscriptMagic.end(), bytes.begin()))
      throw MalformedTranscript("bad magic");
    TranscriptHeader h;
    h.version = static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
    if (h.version != kTranscriptVersion) throw MalformedTranscript("unsupported transcript version");
    if (bytes[6] != static_cast<std::uint8_t>(ModulusId::kM61) && bytes[6] != static_cast<std::uint8_t>(ModulusId::kM127))
      throw MalformedTranscript("unknown modulus id");
    h.modulus = static_cast<ModulusId>(bytes[6]);
    if (bytes[7] > static_cast<std::uint8_t>(ChallengeMode::kInteractive))
      throw MalformedTranscript("unknown challenge mode");
    h.mode = static_cast<ChallengeMode>(bytes[7]);
    std::copy(bytes.begin() + 8, bytes.begin() + 40, h.shape_digest.begin());
    pos = TranscriptHeader::kSize;
    const std::uint32_t count = get_u32(bytes, pos);
    ProofTranscript t(h);
    const std::size_t eb = element_bytes(h.modulus);
    for (std::uint32_t i = 0; i < count; ++i) {
      need(5);
      TranscriptPhase p;
      if (bytes[pos] > static_cast<std::uint8_t>(PhaseKind::kActivation)) throw MalformedTranscript("unknown phase kind");
      p.kind = static_cast<PhaseKind>(bytes[pos++]);
      const std::size_t n = get_u32(bytes, pos);
      if (n > (bytes.size() - pos) / eb) throw MalformedTranscript("truncated transcript");
      p.payload.assign(bytes.begin() + pos, bytes.begin() + pos + n * eb);
      pos += n * eb;
      t.phases_.push_back(std::move(p));
    }
    if (pos != bytes.size()) throw MalformedTranscript("trailing bytes after last phase");
    return t;
  }

  friend bool operator==(const ProofTranscript&, const ProofTranscript&) = default;

 private:
  TranscriptHeader header_;
  std::vector<TranscriptPhase> phases_;

  static void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  static std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t& pos) {
    if (b.size() - pos < 4) throw MalformedTranscript("truncated transcript");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[pos + static_cast<std::size_t>(i)];
    pos += 4;
    return v;
  }
};

/// Source of verifier challenges.
///
/// Fiat-Shamir mode keeps a SHA-256 chaining state seeded by the transcript header; every
/// prover message is absorbed and challenges are squeezed from the state with rejection
/// sampling. Interactive mode draws from caller-supplied randomness and ignores absorbs.
class ChallengeSource {
 public:
  static ChallengeSource fiat_shamir(const TranscriptHeader& header) {
    ChallengeSource s(ChallengeMode::kFiatShamir);
    const auto hb = header.bytes();
    s.state_ = Sha256().update("vnn/fiat-shamir/v1").update(hb).finish();
    return s;
  }

  static ChallengeSource interactive(std::function<std::uint64_t()> entropy) {
    ChallengeSource s(ChallengeMode::kInteractive);
    s.entropy_ = std::move(entropy);
    return s;
  }

  static ChallengeSource interactive(std::uint64_t seed) {
    return interactive([rng = std::mt19937_64(seed)]() mutable { return rng(); });
  }

  /// Picks the source a transcript header asks for; `seed` only matters in interactive mode.
  static ChallengeSource for_header(const TranscriptHeader& header, std::uint64_t seed) {
    return header.mode == ChallengeMode::kFiatShamir ? fiat_shamir(header) : interactive(seed);
  }

  ChallengeMode mode() const { return mode_; }

  void absorb(std::span<const std::uint8_t> bytes) {
    if (mode_ != ChallengeMode::kFiatShamir) return;
    state_ = Sha256().update("absorb").update(state_).update_u64(bytes.size()).update(bytes).finish();
  }

  void absorb_digest(std::string_view label, const Digest& d) {
    if (mode_ != ChallengeMode::kFiatShamir) return;
    state_ = Sha256().update("bind").update(state_).update(label).update(d).finish();
  }

  template <PrimeField F>
  F challenge() {
    using Word = typename F::Word;
    constexpr Word mask = F::kModulus;  // 2^Bits - 1
    constexpr int kMaxTries = 1000;
    for (int attempt = 0; attempt < kMaxTries; ++attempt) {
      Word v = 0;
      if (mode_ == ChallengeMode::kFiatShamir) {
        state_ = Sha256().update("squeeze").update(state_).finish();
        for (std::size_t i = F::kBytes; i-- > 0;) v = (v << 8) | state_[i];
      } else {
        v = static_cast<Word>(entropy_());
        if constexpr (F::kBytes == 16) v = (v << 64) | static_cast<Word>(entropy_());
      }
      v &= mask;
      if (v < F::kModulus) return F::from_word(v);
    }
    throw EntropyExhausted();
  }

 private:
  explicit ChallengeSource(ChallengeMode mode) : mode_(mode) {}

  ChallengeMode mode_;
  Digest state_{};
  std::function<std::uint64_t()> entropy_;
};

template <PrimeField F>
void append_elements(std::vector<std::uint8_t>& out, std::span<const F> elems) {
  for (const F& e : elems) {
    const auto b = e.to_bytes();
    out.insert(out.end(), b.begin(), b.end());
  }
}

template <PrimeField F>
std::vector<std::uint8_t> element_bytes_of(std::span<const F> elems) {
  std::vector<std::uint8_t> out;
  out.reserve(elems.size() * F::kBytes);
  append_elements<F>(out, elems);
  return out;
}

/// Prover channel that records every message into a transcript.
template <PrimeField F>
class TranscriptWriter {
 public:
  TranscriptWriter(ProofTranscript& transcript, ChallengeSource& source) : transcript_(transcript), source_(source) {
    if (transcript.header().modulus != F::kId) throw DimensionMismatch("transcript modulus differs from field");
  }

  void begin_phase(PhaseKind kind) {
    transcript_.phases().push_back({kind, {}});
    open_ = true;
  }

  void send(std::span<const F> msg) {
    if (!open_) throw ChannelClosed("send outside of a phase");
    const auto bytes = element_bytes_of<F>(msg);
    auto& payload = transcript_.phases().back().payload;
    payload.insert(payload.end(), bytes.begin(), bytes.end());
    source_.absorb(bytes);
  }

  F challenge() { return source_.template challenge<F>(); }

  void end_phase() { open_ = false; }

 private:
  ProofTranscript& transcript_;
  ChallengeSource& source_;
  bool open_ = false;
};

/// Verifier channel that replays a received transcript phase by phase.
template <PrimeField F>
class TranscriptReader {
 public:
  TranscriptReader(const ProofTranscript& transcript, ChallengeSource& source)
      : transcript_(transcript), source_(source) {
    if (transcript.header().modulus != F::kId) throw MalformedTranscript("transcript modulus differs from model");
  }

  void begin_phase(PhaseKind kind) {
    if (next_phase_ >= transcript_.phases().size()) throw MalformedTranscript("transcript ended early");
    current_ = &transcript_.phases()[next_phase_++];
    if (current_->kind != kind) throw MalformedTranscript("unexpected phase kind");
    offset_ = 0;
  }

  std::vector<F> receive(std::size_t n) {
    if (current_ == nullptr) throw MalformedTranscript("receive outside of a phase");
    const std::size_t want = n * F::kBytes;
    if (current_->payload.size() - offset_ < want) throw MalformedTranscript("phase has too few elements");
    std::span<const std::uint8_t> bytes(current_->payload.data() + offset_, want);
    std::vector<F> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      out.push_back(F::from_bytes(std::span<const std::uint8_t, F::kBytes>(bytes.data() + i * F::kBytes, F::kBytes)));
    source_.absorb(bytes);
    offset_ += want;
    return out;
  }

  F challenge() { return source_.template challenge<F>(); }

  void end_phase() {
    if (current_ == nullptr || offset_ != current_->payload.size()) throw MalformedTranscript("phase has extra elements");
    current_ = nullptr;
  }

  /// All phases consumed.
  void finish() const {
    if (next_phase_ != transcript_.phases().size()) throw MalformedTranscript("transcript has extra phases");
  }

 private:
  const ProofTranscript& transcript_;
  ChallengeSource& source_;
  std::size_t next_phase_ = 0;
  const TranscriptPhase* current_ = nullptr;
  std::size_t offset_ = 0;
};

}  // namespace vnn
