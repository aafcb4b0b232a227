/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef CODECAP_CERT_HPP_
#define CODECAP_CERT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codecap/attrs.hpp"
#include "codecap/keys.hpp"

namespace codecap {

namespace attr {
// Required certificate attributes.
inline constexpr std::string_view kPubkey = "pubkey";
inline constexpr std::string_view kIssuerPubkey = "issuerPubkey";
inline constexpr std::string_view kRights = "rights";
inline constexpr std::string_view kPLength = "pLength";
inline constexpr std::string_view kSerial = "serial";
// Optional certificate attributes.
inline constexpr std::string_view kSubjectName = "subjectName";
inline constexpr std::string_view kIssuerName = "issuerName";
inline constexpr std::string_view kNotBefore = "notBefore";
inline constexpr std::string_view kNotAfter = "notAfter";
inline constexpr std::string_view kObjectId = "objectId";
inline constexpr std::string_view kVersion = "version";
// Request attributes.
inline constexpr std::string_view kType = "type";
inline constexpr std::string_view kSignerPubkey = "signerPubkey";
inline constexpr std::string_view kNonce = "nonce";
inline constexpr std::string_view kTimestamp = "timestamp";
} // namespace attr

/// One link of a delegation chain: a signed attribute map. The signature
/// covers canonical_encode(attrs) and lives outside the map.
struct Certificate {
    AttrMap attrs;
    Bytes signature;

    const AttrValue* find(std::string_view name) const;
    std::optional<std::string> get_string(std::string_view name) const;
    std::optional<std::int64_t> get_int(std::string_view name) const;

    std::optional<PublicKey> subject_pubkey() const;
    std::optional<PublicKey> issuer_pubkey() const;
    std::optional<std::int64_t> p_length() const;
    /// Empty string when the attribute is missing (an invalid certificate).
    std::string rights_source() const;

    bool operator==(const Certificate&) const = default;
};

/// Ordered delegation chain C_1..C_n, root first.
struct Heritage {
    std::vector<Certificate> certs;

    std::size_t size() const { return certs.size(); }
    bool empty() const { return certs.empty(); }
    const Certificate& first() const { return certs.front(); }
    const Certificate& tail() const { return certs.back(); }

    bool operator==(const Heritage&) const = default;
};

/// A signed request; shaped like a certificate, logically the chain's C_{n+1}.
struct RequestCert {
    AttrMap attrs;
    Bytes signature;

    const AttrValue* find(std::string_view name) const;
    std::optional<std::string> get_string(std::string_view name) const;
    std::optional<std::int64_t> get_int(std::string_view name) const;
    std::optional<PublicKey> signer_pubkey() const;
    std::string type() const;

    bool operator==(const RequestCert&) const = default;
};

/// Signs `attrs` with the issuer key. Requires the five mandatory attributes
/// and attrs.issuerPubkey == issuer.public_key(); throws Error otherwise.
Certificate sign_certificate(const AttrMap& attrs, const KeyPair& issuer);

/// True iff the signature verifies under attrs.issuerPubkey over the
/// canonical bytes. Malformed certificates yield false, never throw.
bool verify_certificate(const Certificate& cert);

/// Signs a request attribute map; attrs.signerPubkey must match the signer.
RequestCert sign_request_cert(const AttrMap& attrs, const KeyPair& signer);
bool verify_request_cert(const RequestCert& request);

enum class HeritageCheck {
    ok,
    structure,     // required attribute missing or ill-typed
    root_mismatch, // C_1.issuerPubkey != root
    chain_break,   // C_{i+1}.issuerPubkey != C_i.pubkey
    p_length,      // not strictly decreasing or negative
    signature,
    validity, // clock outside [notBefore, notAfter]
};

std::string_view heritage_check_name(HeritageCheck check);

struct ValidationReport {
    HeritageCheck failing_check = HeritageCheck::ok;
    /// 1-based index of the offending certificate (C_i numbering); 0 when ok.
    int cert_index = 0;
    std::string detail;

    bool ok() const { return failing_check == HeritageCheck::ok; }
};

/// Runs the chain checks in order (structure, root binding, key chaining,
/// pLength monotonicity, signatures, validity window) and reports the first
/// failure. `now` is the validator clock (seconds since epoch, zero skew).
ValidationReport validate_heritage(const PublicKey& root, const Heritage& heritage,
                                   std::int64_t now);

// Armored text format. One certificate:
//   -----BEGIN CODECAP CERT-----
//   base64 of canonical attrs || be32 signature length || signature, 64-char lines
//   -----END CODECAP CERT-----
// A heritage is the concatenation of blocks, C_1 first, one newline apart.

std::string encode_heritage(const Heritage& heritage);
/// Throws Error naming the offending 1-based block index.
Heritage decode_heritage(std::string_view text);

std::string encode_request_armor(const RequestCert& request);
RequestCert decode_request_armor(std::string_view text);

} // namespace codecap

#endif // CODECAP_CERT_HPP_
