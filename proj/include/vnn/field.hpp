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

#include <array>
#include <compare>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "vnn/errors.hpp"

namespace vnn {

using u128 = unsigned __int128;
using i128 = __int128;

// Signed integers carried through quantization; wide enough for |v| <= (2^127-1)/2.
using SignedInt = i128;

enum class ModulusId : std::uint8_t { kM61 = 1, kM127 = 2 };

namespace detail {

template <unsigned Bits>
struct MersenneWord;

template <>
struct MersenneWord<61> {
  using type = std::uint64_t;
};

template <>
struct MersenneWord<127> {
  using type = u128;
};

}  // namespace detail

/// Prime field F_p for the Mersenne primes p = 2^61-1 and p = 2^127-1.
///
/// Elements are always stored fully reduced. Multiplication folds the double-width
/// product at bit `Bits` using 2^Bits = 1 (mod p), so no division is ever performed.
template <unsigned Bits>
class MersenneField {
  static_assert(Bits == 61 || Bits == 127, "only 2^61-1 and 2^127-1 are supported");

 public:
  using Word = typename detail::MersenneWord<Bits>::type;

  static constexpr unsigned kBits = Bits;
  static constexpr Word kModulus = (Word{1} << Bits) - 1;
  static constexpr std::size_t kBytes = sizeof(Word);
  static constexpr ModulusId kId = Bits == 61 ? ModulusId::kM61 : ModulusId::kM127;
  static constexpr std::string_view kName = Bits == 61 ? "M61" : "M127";

  constexpr MersenneField() = default;

  /// Reduces an arbitrary word mod p.
  static constexpr MersenneField from_word(Word v) {
    MersenneField f;
    f.value_ = reduce_word(v);
    return f;
  }

  static constexpr MersenneField from_u64(std::uint64_t v) { return from_word(static_cast<Word>(v)); }

  static constexpr MersenneField zero() { return {}; }
  static constexpr MersenneField one() { return from_word(1); }

  constexpr Word value() const { return value_; }
  constexpr bool is_zero() const { return value_ == 0; }

  friend constexpr MersenneField operator+(MersenneField a, MersenneField b) {
    // Both operands are < 2^Bits so the sum fits in Word without wrapping.
    Word s = a.value_ + b.value_;
    if (s >= kModulus) s -= kModulus;
    return raw(s);
  }

  friend constexpr MersenneField operator-(MersenneField a, MersenneField b) {
    return raw(a.value_ >= b.value_ ? a.value_ - b.value_ : a.value_ + (kModulus - b.value_));
  }

  friend constexpr MersenneField operator*(MersenneField a, MersenneField b) {
    return raw(mul_reduce(a.value_, b.value_));
  }

  constexpr MersenneField operator-() const { return value_ == 0 ? *this : raw(kModulus - value_); }

  constexpr MersenneField& operator+=(MersenneField o) { return *this = *this + o; }
  constexpr MersenneField& operator-=(MersenneField o) { return *this = *this - o; }
  constexpr MersenneField& operator*=(MersenneField o) { return *this = *this * o; }

  friend constexpr bool operator==(MersenneField a, MersenneField b) = default;

  constexpr MersenneField square() const { return *this * *this; }

  constexpr MersenneField pow(Word e) const {
    MersenneField base = *this;
    MersenneField acc = one();
    while (e != 0) {
      if (e & 1) acc *= base;
      base = base.square();
      e >>= 1;
    }
    return acc;
  }

  /// Fermat inversion a^(p-2).
  constexpr MersenneField inverse() const {
    if (value_ == 0) throw ZeroInverse();
    return pow(kModulus - 2);
  }

  /// Little-endian canonical encoding, exactly kBytes bytes.
  void write_bytes(std::span<std::uint8_t, kBytes> out) const {
    Word v = value_;
    for (std::size_t i = 0; i < kBytes; ++i) {
      out[i] = static_cast<std::uint8_t>(v & 0xff);
      v >>= 8;
    }
  }

  std::array<std::uint8_t, kBytes> to_bytes() const {
    std::array<std::uint8_t, kBytes> out{};
    write_bytes(out);
    return out;
  }

  /// Parses a canonical encoding; values >= p are rejected.
  static MersenneField from_bytes(std::span<const std::uint8_t, kBytes> in) {
    Word v = 0;
    for (std::size_t i = kBytes; i-- > 0;) v = (v << 8) | in[i];
    if (v >= kModulus) throw MalformedTranscript("non-canonical field element on the wire");
    return raw(v);
  }

  // Lazy multiply-accumulate support for matrix kernels on the 61-bit field: products
  // of two reduced elements are < 2^122, so up to 63 of them fit in a u128.
  static constexpr std::size_t kLazyTerms = 32;
  static constexpr u128 wide_product(MersenneField a, MersenneField b) {
    return static_cast<u128>(a.value_) * b.value_;
  }
  static constexpr MersenneField reduce_wide(u128 x) {
    static_assert(Bits == 61);
    u128 folded = (x & kModulus) + (x >> 61);  // < 2^68
    Word r = static_cast<Word>((folded & kModulus) + (folded >> 61));
    if (r >= kModulus) r -= kModulus;
    return raw(r);
  }

 private:
  Word value_ = 0;

  static constexpr MersenneField raw(Word v) {
    MersenneField f;
    f.value_ = v;
    return f;
  }

  static constexpr Word reduce_word(Word v) {
    v = (v & kModulus) + (v >> Bits);
    if (v >= kModulus) v -= kModulus;
    return v;
  }

  static constexpr Word mul_reduce(Word a, Word b) {
    if constexpr (Bits == 61) {
      u128 prod = static_cast<u128>(a) * b;  // < 2^122
      Word r = static_cast<Word>(prod & kModulus) + static_cast<Word>(prod >> 61);
      if (r >= kModulus) r -= kModulus;
      return r;
    } else {
      // 128x128 -> 256 schoolbook over 64-bit limbs, then fold with 2^128 = 2 (mod p).
      constexpr u128 kLow64 = ~std::uint64_t{0};
      const u128 a0 = a & kLow64, a1 = a >> 64;
      const u128 b0 = b & kLow64, b1 = b >> 64;
      const u128 p00 = a0 * b0;
      const u128 mid = a0 * b1 + a1 * b0;  // each term < 2^127
      const u128 p11 = a1 * b1;
      const u128 lo = p00 + (mid << 64);
      const u128 carry = lo < p00 ? 1 : 0;
      const u128 hi = p11 + (mid >> 64) + carry;  // < 2^126
      u128 r = (lo & kModulus) + (lo >> 127) + (hi << 1);
      r = (r & kModulus) + (r >> 127);
      if (r >= kModulus) r -= kModulus;
      return r;
    }
  }
};

using Fp61 = MersenneField<61>;
using Fp127 = MersenneField<127>;

template <class F>
concept PrimeField = requires { F::kBits; F::kModulus; } &&
                     (std::same_as<F, Fp61> || std::same_as<F, Fp127>);

/// Largest magnitude representable by the signed encoding: (p-1)/2.
template <PrimeField F>
constexpr SignedInt signed_bound() {
  return static_cast<SignedInt>((F::kModulus - 1) / 2);
}

/// v >= 0 maps to v, v < 0 maps to p - |v|.
template <PrimeField F>
constexpr F encode_signed(SignedInt v) {
  constexpr SignedInt bound = signed_bound<F>();
  if (v > bound || v < -bound) throw OutOfRange("signed value outside [-(p-1)/2, (p-1)/2]");
  using Word = typename F::Word;
  if (v >= 0) return F::from_word(static_cast<Word>(v));
  return -F::from_word(static_cast<Word>(-v));
}

/// Elements above (p-1)/2 decode as negative.
template <PrimeField F>
constexpr SignedInt decode_signed(F e) {
  constexpr auto half = static_cast<typename F::Word>(signed_bound<F>());
  if (e.value() <= half) return static_cast<SignedInt>(e.value());
  return -static_cast<SignedInt>(F::kModulus - e.value());
}

/// Small signed constants, e.g. Lagrange denominators.
template <PrimeField F>
constexpr F from_int(std::int64_t v) {
  return v >= 0 ? F::from_u64(static_cast<std::uint64_t>(v)) : -F::from_u64(static_cast<std::uint64_t>(-v));
}

inline std::string to_string(i128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  u128 m = neg ? static_cast<u128>(-(v + 1)) + 1 : static_cast<u128>(v);
  std::string s;
  while (m != 0) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(m % 10)));
    m /= 10;
  }
  if (neg) s.insert(s.begin(), '-');
  return s;
}

inline std::string to_string(u128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v != 0) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return s;
}

inline std::string_view modulus_name(ModulusId id) { return id == ModulusId::kM61 ? "M61" : "M127"; }

}  // namespace vnn
