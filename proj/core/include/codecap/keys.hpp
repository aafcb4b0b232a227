/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef CODECAP_KEYS_HPP_
#define CODECAP_KEYS_HPP_

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "codecap/attrs.hpp"

namespace codecap {

inline constexpr std::size_t kSeedBytes = 32;
inline constexpr std::size_t kPublicKeyBytes = 32;
inline constexpr std::size_t kSignatureBytes = 64;

/// 32-byte signing public key. Rendered as 64 lowercase hex characters in
/// every text context (attributes, key files, handshakes).
struct PublicKey {
    std::array<std::uint8_t, kPublicKeyBytes> data{};

    static PublicKey from_hex(std::string_view hex);
    static std::optional<PublicKey> try_from_hex(std::string_view hex);
    std::string hex() const;

    auto operator<=>(const PublicKey&) const = default;
};

/// A signing key pair derived from a 32-byte seed. The seed is the at-rest
/// private-key representation (64 hex chars); it never appears in any
/// certificate, heritage, or wire message.
class KeyPair {
public:
    static KeyPair generate();
    /// Deterministic: a fixed seed always yields the same key pair.
    /// Throws Error unless the seed is exactly 32 bytes.
    static KeyPair from_seed(std::span<const std::uint8_t> seed);
    static KeyPair from_seed_hex(std::string_view hex);

    const PublicKey& public_key() const { return public_; }
    std::string seed_hex() const;

    Bytes sign(std::span<const std::uint8_t> message) const;

private:
    KeyPair() = default;
    std::array<std::uint8_t, kSeedBytes> seed_{};
    std::array<std::uint8_t, 64> secret_{};
    PublicKey public_{};
};

bool verify_signature(const PublicKey& key, std::span<const std::uint8_t> message,
                      std::span<const std::uint8_t> signature);

Bytes random_bytes(std::size_t n);
std::string random_hex(std::size_t n_bytes);

} // namespace codecap

#endif // CODECAP_KEYS_HPP_
