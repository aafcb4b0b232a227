/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef CODECAP_CODECAP_HPP
#define CODECAP_CODECAP_HPP

/*
 * Codecap lifecycle: minting, restricted delegation, confinement, rights
 * amplification, request signing, and the authorization decision. A codecap
 * is a heritage paired with the private key of the heritage's last subject;
 * only heritages travel between principals.
 */

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codecap/cert.hpp"
#include "codecap/keys.hpp"
#include "codecap/rfl.hpp"

namespace codecap {

struct Codecap {
    Heritage heritage;
    KeyPair key;
};

enum class Stage {
    none,
    transport_binding,
    heritage,
    request_signature,
    version,
    rights,
};

std::string_view stage_name(Stage stage);

struct Decision {
    bool allowed = false;
    Stage failing_stage = Stage::none;
    // 1-based certificate position whose rights function denied; 0 otherwise.
    int rights_index = 0;
    std::string detail;
    ValidationReport heritage_report;
    std::vector<rfl::EvalOutcome> rights_outcomes;

    // "rights(2)" when a rights function denied, otherwise the stage name.
    std::string stage_label() const;
};

struct MintOptions {
    std::optional<std::string> serial;
    std::optional<std::string> subject_name;
    std::optional<std::string> issuer_name;
    std::optional<std::int64_t> not_before;
    std::optional<std::int64_t> not_after;
};

// Mints the one-certificate heritage for an object-scoped capability.
Heritage mint_root(const KeyPair& service_key, const PublicKey& subject_pub,
                   std::string_view rights_src, std::int64_t p_length, std::string_view object_id,
                   std::int64_t version, const MintOptions& options = {});

// Mints a service-scoped capability (no objectId/version), e.g. factory
// rights or a bootstrap cap for a directory service.
Heritage mint_service_root(const KeyPair& service_key, const PublicKey& subject_pub,
                           std::string_view rights_src, std::int64_t p_length,
                           const MintOptions& options = {});

// Restricted delegation: extends c's heritage with one certificate for
// target_pub. Returns only the heritage; the recipient pairs it with its own
// private key.
Heritage delegate(const Codecap& c, const PublicKey& target_pub, std::string_view rights_src,
                  std::int64_t p_length, const MintOptions& options = {});

// Wraps a rights function so it allows nothing unless its certificate is the
// last on the heritage. The source must be a single expression.
std::string confine(std::string_view rights_src);

// Truncates h at the deepest certificate whose subject is holder's key and
// pairs the prefix with holder's private key.
Codecap amplify(const Heritage& h, const KeyPair& holder);

// Signs a request certificate with c's key. attrs must contain `type`;
// `nonce` (random) and `timestamp` (now) are filled in when absent.
RequestCert sign_request(const Codecap& c, AttrMap attrs,
                         std::optional<std::int64_t> now = std::nullopt);

std::int64_t unix_now();

struct AuthzOptions {
    // Transport-authenticated peer key; absent means the transport proved
    // nothing, which denies unless allow_unauthenticated_transport is set.
    std::optional<PublicKey> transport_pub;
    bool allow_unauthenticated_transport = false;
    std::int64_t now = 0;
    // Object snapshot exposed to rights functions as `state`; null otherwise.
    rfl::Value state;
    std::int64_t budget = rfl::kDefaultStepBudget;
    // Service hook mapping object id to its current version. When absent the
    // version stage is skipped (pure library validation has no version
    // authority).
    std::function<std::optional<std::int64_t>(std::string_view object_id)> version_of;
};

// The full acceptance predicate. Stages run in order and short-circuit:
// transport binding, heritage validation, request signature, version match,
// then every certificate's rights function with idx = position.
Decision authorize(const PublicKey& root_pub, const Heritage& h, const RequestCert& r,
                   const AuthzOptions& options);

// Rights-function views of certificates and requests: attribute maps as
// records (byte-string attributes omitted) plus `subject`/`issuer` aliases
// for the display-name attributes.
rfl::Value certificate_view(const Certificate& cert);
rfl::Value request_view(const RequestCert& request);

rfl::EvalContext make_context(const Heritage& h, std::size_t idx, const RequestCert& r,
                              std::int64_t now, const rfl::Value& state);

} // namespace codecap

#endif
