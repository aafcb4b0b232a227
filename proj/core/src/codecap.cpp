/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "codecap/codecap.hpp"

#include <chrono>

#include "codecap/error.hpp"

namespace codecap {

namespace {

constexpr std::size_t kSerialBytes = 16;
constexpr std::size_t kNonceBytes = 16;

void require_parseable_rights(std::string_view rights_src, std::string_view op) {
    try {
        rfl::parse_program(rights_src);
    } catch (const rfl::ParseError& e) {
        throw Error(std::string(op) + ": rights function does not parse: " + e.what());
    }
}

AttrMap base_cert_attrs(const PublicKey& subject_pub, const PublicKey& issuer_pub,
                        std::string_view rights_src, std::int64_t p_length,
                        const MintOptions& options) {
    AttrMap attrs;
    attrs[std::string(attr::kPubkey)] = subject_pub.hex();
    attrs[std::string(attr::kIssuerPubkey)] = issuer_pub.hex();
    attrs[std::string(attr::kRights)] = std::string(rights_src);
    attrs[std::string(attr::kPLength)] = p_length;
    attrs[std::string(attr::kSerial)] = options.serial.value_or(random_hex(kSerialBytes));
    if (options.subject_name) attrs[std::string(attr::kSubjectName)] = *options.subject_name;
    if (options.issuer_name) attrs[std::string(attr::kIssuerName)] = *options.issuer_name;
    if (options.not_before) attrs[std::string(attr::kNotBefore)] = *options.not_before;
    if (options.not_after) attrs[std::string(attr::kNotAfter)] = *options.not_after;
    return attrs;
}

} // namespace

std::string_view stage_name(Stage stage) {
    switch (stage) {
        case Stage::none: return "none";
        case Stage::transport_binding: return "transport_binding";
        case Stage::heritage: return "heritage";
        case Stage::request_signature: return "request_signature";
        case Stage::version: return "version";
        case Stage::rights: return "rights";
    }
    return "unknown";
}

std::string Decision::stage_label() const {
    if (failing_stage == Stage::rights) {
        return "rights(" + std::to_string(rights_index) + ")";
    }
    return std::string(stage_name(failing_stage));
}

Heritage mint_root(const KeyPair& service_key, const PublicKey& subject_pub,
                   std::string_view rights_src, std::int64_t p_length, std::string_view object_id,
                   std::int64_t version, const MintOptions& options) {
    if (p_length < 0) throw Error("mint_root: pLength must be >= 0");
    if (version < 0) throw Error("mint_root: version must be >= 0");
    require_parseable_rights(rights_src, "mint_root");
    AttrMap attrs =
        base_cert_attrs(subject_pub, service_key.public_key(), rights_src, p_length, options);
    attrs[std::string(attr::kObjectId)] = std::string(object_id);
    attrs[std::string(attr::kVersion)] = version;
    Heritage h;
    h.certs.push_back(sign_certificate(attrs, service_key));
    return h;
}

Heritage mint_service_root(const KeyPair& service_key, const PublicKey& subject_pub,
                           std::string_view rights_src, std::int64_t p_length,
                           const MintOptions& options) {
    if (p_length < 0) throw Error("mint_service_root: pLength must be >= 0");
    require_parseable_rights(rights_src, "mint_service_root");
    AttrMap attrs =
        base_cert_attrs(subject_pub, service_key.public_key(), rights_src, p_length, options);
    Heritage h;
    h.certs.push_back(sign_certificate(attrs, service_key));
    return h;
}

Heritage delegate(const Codecap& c, const PublicKey& target_pub, std::string_view rights_src,
                  std::int64_t p_length, const MintOptions& options) {
    if (c.heritage.empty()) throw Error("delegate: empty heritage");
    const Certificate& tail = c.heritage.certs.back();
    auto tail_pub = tail.subject_pubkey();
    if (!tail_pub || *tail_pub != c.key.public_key()) {
        throw Error("delegate: private key does not match the heritage's last certificate");
    }
    auto tail_depth = tail.p_length();
    if (!tail_depth) throw Error("delegate: last certificate has no pLength");
    if (*tail_depth == 0) throw Error("delegate: delegation depth exhausted");
    if (p_length < 0 || p_length >= *tail_depth) {
        throw Error("delegate: pLength must satisfy 0 <= pLength < " +
                    std::to_string(*tail_depth));
    }
    require_parseable_rights(rights_src, "delegate");
    AttrMap attrs =
        base_cert_attrs(target_pub, c.key.public_key(), rights_src, p_length, options);
    Heritage h = c.heritage;
    h.certs.push_back(sign_certificate(attrs, c.key));
    return h;
}

std::string confine(std::string_view rights_src) {
    require_parseable_rights(rights_src, "confine");
    if (!rfl::parses_as_expression(rights_src)) {
        throw Error("confine: rights function must be a single expression (no bindings)");
    }
    return "(isLast) && (" + std::string(rights_src) + ")";
}

Codecap amplify(const Heritage& h, const KeyPair& holder) {
    for (std::size_t i = h.certs.size(); i > 0; --i) {
        auto subject = h.certs[i - 1].subject_pubkey();
        if (subject && *subject == holder.public_key()) {
            Codecap c{Heritage{}, holder};
            c.heritage.certs.assign(h.certs.begin(), h.certs.begin() + static_cast<long>(i));
            return c;
        }
    }
    throw Error("amplify: key not on heritage");
}

RequestCert sign_request(const Codecap& c, AttrMap attrs, std::optional<std::int64_t> now) {
    auto type = attrs.find(std::string(attr::kType));
    if (type == attrs.end() || !std::holds_alternative<std::string>(type->second)) {
        throw Error("sign_request: request must carry a string 'type' attribute");
    }
    if (!attrs.contains(std::string(attr::kNonce))) {
        attrs[std::string(attr::kNonce)] = random_hex(kNonceBytes);
    }
    if (!attrs.contains(std::string(attr::kTimestamp))) {
        attrs[std::string(attr::kTimestamp)] = now.value_or(unix_now());
    }
    return sign_request_cert(attrs, c.key);
}

std::int64_t unix_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

rfl::Value certificate_view(const Certificate& cert) {
    rfl::Value::Record record;
    for (const auto& [name, value] : cert.attrs) {
        if (const auto* s = std::get_if<std::string>(&value)) {
            record.emplace(name, rfl::Value(*s));
        } else if (const auto* i = std::get_if<std::int64_t>(&value)) {
            record.emplace(name, rfl::Value(*i));
        } else if (const auto* b = std::get_if<bool>(&value)) {
            record.emplace(name, rfl::Value(*b));
        }
    }
    record.insert_or_assign("subject",
                            rfl::Value(cert.get_string(attr::kSubjectName).value_or("")));
    record.insert_or_assign("issuer",
                            rfl::Value(cert.get_string(attr::kIssuerName).value_or("")));
    return rfl::Value::record(std::move(record));
}

rfl::Value request_view(const RequestCert& request) {
    rfl::Value::Record record;
    for (const auto& [name, value] : request.attrs) {
        if (const auto* s = std::get_if<std::string>(&value)) {
            record.emplace(name, rfl::Value(*s));
        } else if (const auto* i = std::get_if<std::int64_t>(&value)) {
            record.emplace(name, rfl::Value(*i));
        } else if (const auto* b = std::get_if<bool>(&value)) {
            record.emplace(name, rfl::Value(*b));
        }
    }
    return rfl::Value::record(std::move(record));
}

rfl::EvalContext make_context(const Heritage& h, std::size_t idx, const RequestCert& r,
                              std::int64_t now, const rfl::Value& state) {
    rfl::EvalContext ctx;
    rfl::Value::List views;
    views.reserve(h.certs.size());
    for (const auto& cert : h.certs) views.push_back(certificate_view(cert));
    ctx.heritage = rfl::Value::list(std::move(views));
    ctx.idx = static_cast<std::int64_t>(idx);
    ctx.request = request_view(r);
    ctx.now = now;
    ctx.state = state;
    return ctx;
}

Decision authorize(const PublicKey& root_pub, const Heritage& h, const RequestCert& r,
                   const AuthzOptions& options) {
    Decision decision;
    auto deny = [&](Stage stage, std::string detail) -> Decision& {
        decision.allowed = false;
        decision.failing_stage = stage;
        decision.detail = std::move(detail);
        return decision;
    };

    if (h.empty()) {
        decision.heritage_report = validate_heritage(root_pub, h, options.now);
        return deny(Stage::heritage, "empty heritage");
    }

    auto tail_pub = h.certs.back().subject_pubkey();
    if (options.transport_pub) {
        if (!tail_pub || *tail_pub != *options.transport_pub) {
            return deny(Stage::transport_binding,
                        "transport key does not match the heritage's last certificate");
        }
    } else if (!options.allow_unauthenticated_transport) {
        return deny(Stage::transport_binding, "transport peer key is not authenticated");
    }

    decision.heritage_report = validate_heritage(root_pub, h, options.now);
    if (!decision.heritage_report.ok()) {
        return deny(Stage::heritage,
                    std::string(heritage_check_name(decision.heritage_report.failing_check)) +
                        " at cert " + std::to_string(decision.heritage_report.cert_index) + ": " +
                        decision.heritage_report.detail);
    }

    auto signer = r.signer_pubkey();
    if (!signer || !tail_pub || *signer != *tail_pub) {
        return deny(Stage::request_signature,
                    "request signer is not the heritage's last subject");
    }
    if (!verify_request_cert(r)) {
        return deny(Stage::request_signature, "request signature does not verify");
    }

    const Certificate& first = h.certs.front();
    if (auto cap_version = first.get_int(attr::kVersion); cap_version && options.version_of) {
        auto object_id = first.get_string(attr::kObjectId).value_or("");
        auto current = options.version_of(object_id);
        if (!current) {
            return deny(Stage::version, "no current version for object '" + object_id + "'");
        }
        if (*current != *cap_version) {
            return deny(Stage::version,
                        "capability version " + std::to_string(*cap_version) +
                            " does not match current version " + std::to_string(*current));
        }
    }

    for (std::size_t i = 0; i < h.certs.size(); ++i) {
        rfl::EvalContext ctx = make_context(h, i, r, options.now, options.state);
        rfl::EvalOutcome outcome =
            rfl::evaluate_source(h.certs[i].rights_source(), ctx, options.budget);
        decision.rights_outcomes.push_back(outcome);
        if (!outcome.allowed) {
            decision.rights_index = static_cast<int>(i) + 1;
            return deny(Stage::rights, "rights function " + std::to_string(i + 1) + " denied (" +
                                           std::string(rfl::cause_name(outcome.cause)) + ")");
        }
    }

    decision.allowed = true;
    decision.failing_stage = Stage::none;
    return decision;
}

} // namespace codecap
