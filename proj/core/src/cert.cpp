/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "codecap/cert.hpp"

#include <algorithm>
#include <sstream>

#include "codecap/error.hpp"

namespace codecap {

namespace {

constexpr std::string_view kArmorBegin = "-----BEGIN CODECAP CERT-----";
constexpr std::string_view kArmorEnd = "-----END CODECAP CERT-----";
constexpr std::size_t kArmorLineWidth = 64;

constexpr char kBase64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(std::span<const std::uint8_t> data) {
    std::string out;
    out.reserve(((data.size() + 2) / 3) * 4);
    std::size_t i = 0;
    while (i + 3 <= data.size()) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out.push_back(kBase64Alphabet[(v >> 18) & 0x3F]);
        out.push_back(kBase64Alphabet[(v >> 12) & 0x3F]);
        out.push_back(kBase64Alphabet[(v >> 6) & 0x3F]);
        out.push_back(kBase64Alphabet[v & 0x3F]);
        i += 3;
    }
    std::size_t rem = data.size() - i;
    if (rem == 1) {
        std::uint32_t v = data[i] << 16;
        out.push_back(kBase64Alphabet[(v >> 18) & 0x3F]);
        out.push_back(kBase64Alphabet[(v >> 12) & 0x3F]);
        out.append("==");
    } else if (rem == 2) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
        out.push_back(kBase64Alphabet[(v >> 18) & 0x3F]);
        out.push_back(kBase64Alphabet[(v >> 12) & 0x3F]);
        out.push_back(kBase64Alphabet[(v >> 6) & 0x3F]);
        out.push_back('=');
    }
    return out;
}

int base64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

Bytes base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw Error("bad base64 length");
    Bytes out;
    out.reserve((text.size() / 4) * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int pad = 0;
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) {
            char c = text[i + k];
            if (c == '=') {
                // Padding may only appear in the final group's tail.
                if (i + 4 != text.size() || k < 2) throw Error("bad base64 padding");
                ++pad;
                v <<= 6;
                continue;
            }
            if (pad > 0) throw Error("bad base64 padding");
            int d = base64_value(c);
            if (d < 0) throw Error("bad base64 character");
            v = (v << 6) | static_cast<std::uint32_t>(d);
        }
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
    }
    return out;
}

const AttrValue* find_attr(const AttrMap& attrs, std::string_view name) {
    auto it = attrs.find(std::string(name));
    return it == attrs.end() ? nullptr : &it->second;
}

std::optional<std::string> attr_string(const AttrMap& attrs, std::string_view name) {
    const auto* v = find_attr(attrs, name);
    if (v == nullptr) return std::nullopt;
    if (const auto* s = std::get_if<std::string>(v)) return *s;
    return std::nullopt;
}

std::optional<std::int64_t> attr_int(const AttrMap& attrs, std::string_view name) {
    const auto* v = find_attr(attrs, name);
    if (v == nullptr) return std::nullopt;
    if (const auto* i = std::get_if<std::int64_t>(v)) return *i;
    return std::nullopt;
}

// Returns a description of the first structural problem, or nullopt.
// `first_cert` gates the objectId/version placement rule.
std::optional<std::string> structure_problem(const AttrMap& attrs, bool first_cert) {
    for (auto name : {attr::kPubkey, attr::kIssuerPubkey, attr::kRights, attr::kSerial}) {
        auto s = attr_string(attrs, name);
        if (!s) return "missing or non-string attribute '" + std::string(name) + "'";
    }
    auto p_length = attr_int(attrs, attr::kPLength);
    if (!p_length) return "missing or non-integer attribute 'pLength'";
    if (!PublicKey::try_from_hex(*attr_string(attrs, attr::kPubkey))) {
        return "attribute 'pubkey' is not a 64-hex-char key";
    }
    if (!PublicKey::try_from_hex(*attr_string(attrs, attr::kIssuerPubkey))) {
        return "attribute 'issuerPubkey' is not a 64-hex-char key";
    }
    for (auto name : {attr::kNotBefore, attr::kNotAfter, attr::kVersion}) {
        if (find_attr(attrs, name) != nullptr && !attr_int(attrs, name)) {
            return "attribute '" + std::string(name) + "' must be an integer";
        }
    }
    for (auto name : {attr::kSubjectName, attr::kIssuerName, attr::kObjectId}) {
        if (find_attr(attrs, name) != nullptr && !attr_string(attrs, name)) {
            return "attribute '" + std::string(name) + "' must be a string";
        }
    }
    if (!first_cert) {
        if (find_attr(attrs, attr::kObjectId) != nullptr ||
            find_attr(attrs, attr::kVersion) != nullptr) {
            return "objectId/version are only allowed in the first certificate";
        }
    }
    if (auto version = attr_int(attrs, attr::kVersion); version && *version < 0) {
        return "attribute 'version' must be >= 0";
    }
    return std::nullopt;
}

std::string armor_block(const AttrMap& attrs, const Bytes& signature) {
    Bytes body = encode_signed_body(attrs, signature);
    std::string b64 = base64_encode(body);
    std::string out(kArmorBegin);
    out.push_back('\n');
    for (std::size_t i = 0; i < b64.size(); i += kArmorLineWidth) {
        out.append(b64, i, std::min(kArmorLineWidth, b64.size() - i));
        out.push_back('\n');
    }
    out.append(kArmorEnd);
    return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (end == text.size()) break;
        start = end + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

std::vector<SignedBody> dearmor_blocks(std::string_view text) {
    std::vector<SignedBody> blocks;
    auto lines = split_lines(text);
    std::size_t i = 0;
    while (i < lines.size()) {
        if (lines[i].empty()) {
            ++i;
            continue;
        }
        int block = static_cast<int>(blocks.size()) + 1;
        auto fail = [block](const std::string& why) -> Error {
            return Error("armor block " + std::to_string(block) + ": " + why);
        };
        if (lines[i] != kArmorBegin) throw fail("expected BEGIN line");
        ++i;
        std::string b64;
        bool closed = false;
        for (; i < lines.size(); ++i) {
            if (lines[i] == kArmorEnd) {
                closed = true;
                ++i;
                break;
            }
            if (lines[i] == kArmorBegin || lines[i].empty()) break;
            b64.append(lines[i]);
        }
        if (!closed) throw fail("missing END line");
        Bytes body;
        try {
            body = base64_decode(b64);
        } catch (const Error& e) {
            throw fail(e.what());
        }
        try {
            blocks.push_back(decode_signed_body(body));
        } catch (const Error& e) {
            throw fail(e.what());
        }
    }
    return blocks;
}

} // namespace

const AttrValue* Certificate::find(std::string_view name) const { return find_attr(attrs, name); }
std::optional<std::string> Certificate::get_string(std::string_view name) const {
    return attr_string(attrs, name);
}
std::optional<std::int64_t> Certificate::get_int(std::string_view name) const {
    return attr_int(attrs, name);
}

std::optional<PublicKey> Certificate::subject_pubkey() const {
    auto hex = get_string(attr::kPubkey);
    if (!hex) return std::nullopt;
    return PublicKey::try_from_hex(*hex);
}

std::optional<PublicKey> Certificate::issuer_pubkey() const {
    auto hex = get_string(attr::kIssuerPubkey);
    if (!hex) return std::nullopt;
    return PublicKey::try_from_hex(*hex);
}

std::optional<std::int64_t> Certificate::p_length() const { return get_int(attr::kPLength); }

std::string Certificate::rights_source() const {
    return get_string(attr::kRights).value_or(std::string());
}

const AttrValue* RequestCert::find(std::string_view name) const { return find_attr(attrs, name); }
std::optional<std::string> RequestCert::get_string(std::string_view name) const {
    return attr_string(attrs, name);
}
std::optional<std::int64_t> RequestCert::get_int(std::string_view name) const {
    return attr_int(attrs, name);
}

std::optional<PublicKey> RequestCert::signer_pubkey() const {
    auto hex = get_string(attr::kSignerPubkey);
    if (!hex) return std::nullopt;
    return PublicKey::try_from_hex(*hex);
}

std::string RequestCert::type() const { return get_string(attr::kType).value_or(std::string()); }

Certificate sign_certificate(const AttrMap& attrs, const KeyPair& issuer) {
    if (auto problem = structure_problem(attrs, /*first_cert=*/true)) {
        throw Error("sign_certificate: " + *problem);
    }
    auto issuer_hex = attr_string(attrs, attr::kIssuerPubkey);
    if (*issuer_hex != issuer.public_key().hex()) {
        throw Error("sign_certificate: issuerPubkey does not match the signing key");
    }
    Certificate cert;
    cert.attrs = attrs;
    cert.signature = issuer.sign(canonical_encode(attrs));
    return cert;
}

bool verify_certificate(const Certificate& cert) {
    auto issuer = cert.issuer_pubkey();
    if (!issuer) return false;
    Bytes message;
    try {
        message = canonical_encode(cert.attrs);
    } catch (const Error&) {
        return false;
    }
    return verify_signature(*issuer, message, cert.signature);
}

RequestCert sign_request_cert(const AttrMap& attrs, const KeyPair& signer) {
    if (!attr_string(attrs, attr::kType)) {
        throw Error("sign_request_cert: request must carry a string 'type' attribute");
    }
    AttrMap signed_attrs = attrs;
    auto claimed = attr_string(signed_attrs, attr::kSignerPubkey);
    if (claimed && *claimed != signer.public_key().hex()) {
        throw Error("sign_request_cert: signerPubkey does not match the signing key");
    }
    signed_attrs[std::string(attr::kSignerPubkey)] = signer.public_key().hex();
    RequestCert request;
    request.attrs = std::move(signed_attrs);
    request.signature = signer.sign(canonical_encode(request.attrs));
    return request;
}

bool verify_request_cert(const RequestCert& request) {
    auto signer = request.signer_pubkey();
    if (!signer) return false;
    Bytes message;
    try {
        message = canonical_encode(request.attrs);
    } catch (const Error&) {
        return false;
    }
    return verify_signature(*signer, message, request.signature);
}

std::string_view heritage_check_name(HeritageCheck check) {
    switch (check) {
        case HeritageCheck::ok: return "ok";
        case HeritageCheck::structure: return "structure";
        case HeritageCheck::root_mismatch: return "root mismatch";
        case HeritageCheck::chain_break: return "chain break";
        case HeritageCheck::p_length: return "pLength";
        case HeritageCheck::signature: return "signature";
        case HeritageCheck::validity: return "validity";
    }
    return "unknown";
}

ValidationReport validate_heritage(const PublicKey& root, const Heritage& heritage,
                                   std::int64_t now) {
    ValidationReport report;
    auto fail = [&](HeritageCheck check, int index, std::string detail) {
        report.failing_check = check;
        report.cert_index = index;
        report.detail = std::move(detail);
        return report;
    };

    if (heritage.empty()) return fail(HeritageCheck::structure, 0, "empty heritage");

    const auto& certs = heritage.certs;
    for (std::size_t i = 0; i < certs.size(); ++i) {
        if (auto problem = structure_problem(certs[i].attrs, i == 0)) {
            return fail(HeritageCheck::structure, static_cast<int>(i) + 1, *problem);
        }
    }
    if (*certs[0].issuer_pubkey() != root) {
        return fail(HeritageCheck::root_mismatch, 1, "first certificate not issued by root key");
    }
    for (std::size_t i = 1; i < certs.size(); ++i) {
        if (*certs[i].issuer_pubkey() != *certs[i - 1].subject_pubkey()) {
            return fail(HeritageCheck::chain_break, static_cast<int>(i) + 1,
                        "issuerPubkey does not match previous certificate's pubkey");
        }
    }
    if (*certs[0].p_length() < 0) {
        return fail(HeritageCheck::p_length, 1, "pLength is negative");
    }
    for (std::size_t i = 1; i < certs.size(); ++i) {
        auto prev = *certs[i - 1].p_length();
        auto cur = *certs[i].p_length();
        if (!(prev > cur && cur >= 0)) {
            return fail(HeritageCheck::p_length, static_cast<int>(i) + 1,
                        "pLength must strictly decrease and stay nonnegative");
        }
    }
    for (std::size_t i = 0; i < certs.size(); ++i) {
        if (!verify_certificate(certs[i])) {
            return fail(HeritageCheck::signature, static_cast<int>(i) + 1,
                        "signature does not verify under issuerPubkey");
        }
    }
    for (std::size_t i = 0; i < certs.size(); ++i) {
        auto not_before = certs[i].get_int(attr::kNotBefore);
        auto not_after = certs[i].get_int(attr::kNotAfter);
        if (not_before && now < *not_before) {
            return fail(HeritageCheck::validity, static_cast<int>(i) + 1,
                        "certificate not yet valid");
        }
        if (not_after && now > *not_after) {
            return fail(HeritageCheck::validity, static_cast<int>(i) + 1, "certificate expired");
        }
    }
    return report;
}

std::string encode_heritage(const Heritage& heritage) {
    std::string out;
    for (std::size_t i = 0; i < heritage.certs.size(); ++i) {
        if (i > 0) out.push_back('\n');
        out.append(armor_block(heritage.certs[i].attrs, heritage.certs[i].signature));
    }
    out.push_back('\n');
    return out;
}

Heritage decode_heritage(std::string_view text) {
    auto blocks = dearmor_blocks(text);
    if (blocks.empty()) throw Error("armor block 1: no certificate blocks found");
    Heritage heritage;
    heritage.certs.reserve(blocks.size());
    for (auto& block : blocks) {
        heritage.certs.push_back(Certificate{std::move(block.attrs), std::move(block.signature)});
    }
    return heritage;
}

std::string encode_request_armor(const RequestCert& request) {
    return armor_block(request.attrs, request.signature) + "\n";
}

RequestCert decode_request_armor(std::string_view text) {
    auto blocks = dearmor_blocks(text);
    if (blocks.size() != 1) throw Error("expected exactly one armored request certificate");
    return RequestCert{std::move(blocks[0].attrs), std::move(blocks[0].signature)};
}

} // namespace codecap
