/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "codecap/keys.hpp"

#include <sodium.h>

#include <mutex>

#include "codecap/error.hpp"

namespace codecap {

namespace {

void ensure_sodium() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw Error("libsodium initialization failed");
    });
}

} // namespace

PublicKey PublicKey::from_hex(std::string_view hex) {
    auto key = try_from_hex(hex);
    if (!key) throw Error("public key must be 64 hex characters");
    return *key;
}

std::optional<PublicKey> PublicKey::try_from_hex(std::string_view hex) {
    if (hex.size() != kPublicKeyBytes * 2) return std::nullopt;
    Bytes raw;
    try {
        raw = codecap::from_hex(hex);
    } catch (const Error&) {
        return std::nullopt;
    }
    PublicKey key;
    std::copy(raw.begin(), raw.end(), key.data.begin());
    return key;
}

std::string PublicKey::hex() const {
    return to_hex(data);
}

KeyPair KeyPair::generate() {
    ensure_sodium();
    std::array<std::uint8_t, kSeedBytes> seed;
    randombytes_buf(seed.data(), seed.size());
    return from_seed(seed);
}

KeyPair KeyPair::from_seed(std::span<const std::uint8_t> seed) {
    ensure_sodium();
    if (seed.size() != kSeedBytes) throw Error("key seed must be exactly 32 bytes");
    KeyPair kp;
    std::copy(seed.begin(), seed.end(), kp.seed_.begin());
    if (crypto_sign_seed_keypair(kp.public_.data.data(), kp.secret_.data(), kp.seed_.data()) != 0) {
        throw Error("key derivation failed");
    }
    return kp;
}

KeyPair KeyPair::from_seed_hex(std::string_view hex) {
    Bytes raw = codecap::from_hex(hex);
    return from_seed(raw);
}

std::string KeyPair::seed_hex() const {
    return to_hex(seed_);
}

Bytes KeyPair::sign(std::span<const std::uint8_t> message) const {
    ensure_sodium();
    Bytes sig(kSignatureBytes);
    unsigned long long sig_len = 0;
    crypto_sign_detached(sig.data(), &sig_len, message.data(), message.size(), secret_.data());
    sig.resize(sig_len);
    return sig;
}

bool verify_signature(const PublicKey& key, std::span<const std::uint8_t> message,
                      std::span<const std::uint8_t> signature) {
    ensure_sodium();
    if (signature.size() != kSignatureBytes) return false;
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                       key.data.data()) == 0;
}

Bytes random_bytes(std::size_t n) {
    ensure_sodium();
    Bytes out(n);
    if (n > 0) randombytes_buf(out.data(), out.size());
    return out;
}

std::string random_hex(std::size_t n_bytes) {
    return to_hex(random_bytes(n_bytes));
}

} // namespace codecap
