/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef CODECAP_OBJECT_SERVICE_HPP
#define CODECAP_OBJECT_SERVICE_HPP

/*
 * The service runtime run by a principal: an object store with version
 * numbers, request dispatch through authorize, factory-based creation,
 * version-bump revocation, delegation-on-behalf, directory hosting, and
 * primary-link garbage collection.
 */

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "codecap/cert.hpp"
#include "codecap/codecap.hpp"
#include "codecap/directory.hpp"
#include "codecap/keys.hpp"

namespace codecap {

enum class Status {
    ok = 200,
    bad_request = 400,
    unauthorized = 401,
    denied = 403,
    not_found = 404,
    conflict = 409,
    error = 500,
};

struct Response {
    Status status = Status::ok;
    Bytes payload;
    std::string message;

    bool ok() const { return status == Status::ok; }
    std::string payload_text() const { return std::string(payload.begin(), payload.end()); }

    static Response success(Bytes payload = {}, std::string message = {});
    static Response failure(Status status, std::string message);
};

// A (directory, row) reference whose presence keeps the object alive under
// garbage collection. The heritage grants this service lookup access on the
// directory and must terminate at this service's key.
struct PrimaryLink {
    Heritage directory_heritage;
    std::string row_name;
    std::string group;

    bool operator==(const PrimaryLink&) const = default;
};

struct ObjectRecord {
    std::string object_id;
    std::int64_t version = 0;
    Bytes state;
    std::vector<PrimaryLink> primary_links;
    std::int64_t created_at = 0;
};

struct ServiceConfig {
    KeyPair service_key;
    // The service's subject identifier; challenges carry it as the realm.
    std::string subject;
    std::int64_t step_budget = rfl::kDefaultStepBudget;
    std::int64_t gc_period = 3600;
    bool allow_unauthenticated_transport = false;
    std::string lost_found_directory = "lost+found";
    // Requests must carry a timestamp within this many seconds of the server
    // clock; (signer, nonce) pairs are remembered for twice the window.
    std::int64_t replay_window = 300;
    // Empty path keeps the store in memory only.
    std::filesystem::path data_dir;
};

enum class ProbeResult { found, no_such_name, no_such_directory, unreachable };

struct ProbeOutcome {
    ProbeResult result = ProbeResult::unreachable;
    // The row's stored heritage when result == found.
    std::optional<Heritage> heritage;
};

using LinkProber = std::function<ProbeOutcome(const PrimaryLink&)>;

struct SweepReport {
    std::vector<std::string> persisted;
    std::vector<std::string> destroyed;
    std::vector<std::string> moved_to_lost_found;
};

class ObjectService {
public:
    explicit ObjectService(ServiceConfig config);

    const PublicKey& public_key() const { return config_.service_key.public_key(); }
    const ServiceConfig& config() const { return config_; }

    // The full server path: replay screening, authorization, dispatch on
    // r.type (READ, WRITE, CREATE, DESTROY, BUMPVERSION, DELEGATEONBEHALF,
    // REGISTERLINK, and the directory verbs LOOKUP, CHMOD, INSERT, REMOVE,
    // LIST when the target object is a directory).
    Response handle_request(const Heritage& h, const RequestCert& r,
                            std::optional<PublicKey> transport_pub);

    // Clock injection for tests; defaults to the system clock.
    void set_clock(std::function<std::int64_t()> clock);
    std::int64_t now() const;

    // Probes primary links during gc_sweep. Without one, links whose
    // directory heritage roots at this service are probed in-process and
    // everything else counts as unreachable.
    void set_link_prober(LinkProber prober);
    SweepReport gc_sweep();

    // Local administration for bootstrap and tests; not rights-guarded.
    std::string create_object(Bytes state, std::optional<std::string> object_id = std::nullopt);
    std::string create_directory(std::optional<std::string> object_id = std::nullopt);
    void write_object_state(std::string_view object_id, Bytes state);
    void register_link(std::string_view object_id, PrimaryLink link);
    Heritage mint_for(const PublicKey& subject, std::string_view rights_src,
                      std::int64_t p_length, std::string_view object_id,
                      const MintOptions& options = {});
    Heritage mint_factory(const PublicKey& subject, std::string_view rights_src,
                          std::int64_t p_length, const MintOptions& options = {});

    std::optional<ObjectRecord> object(std::string_view object_id) const;
    std::vector<std::string> object_ids() const;
    std::optional<std::int64_t> version_of(std::string_view object_id) const;

private:
    ServiceConfig config_;
    mutable std::mutex mu_;
    std::map<std::string, ObjectRecord, std::less<>> objects_;
    std::set<std::string, std::less<>> destroyed_;
    std::map<std::pair<std::string, std::string>, std::int64_t> nonces_;
    std::function<std::int64_t()> clock_;
    LinkProber prober_;

    ObjectRecord* find_locked(std::string_view object_id);
    std::optional<std::int64_t> version_of_locked(std::string_view object_id) const;
    std::string create_locked(Bytes state, std::optional<std::string> object_id);
    void destroy_locked(std::string object_id);
    void prune_nonces_locked(std::int64_t now);
    rfl::Value state_record(const ObjectRecord& record) const;

    Response dispatch_locked(ObjectRecord* target, const Heritage& h, const RequestCert& r,
                             std::int64_t now);
    Response handle_read(const ObjectRecord& record, const RequestCert& r);
    Response handle_write(ObjectRecord& record, const RequestCert& r);
    Response handle_create(const RequestCert& r, std::int64_t now);
    Response handle_bump(ObjectRecord& record, const Heritage& h, const RequestCert& r);
    Response handle_delegate_on_behalf(ObjectRecord* target, const Heritage& h,
                                       const RequestCert& r);
    Response handle_register_link(ObjectRecord& record, const RequestCert& r, std::int64_t now);
    Response handle_directory_verb(ObjectRecord& record, const RequestCert& r);

    ProbeOutcome probe_link(const PrimaryLink& link);
    void move_to_lost_found_locked(ObjectRecord& record, const std::vector<std::size_t>& lost);
    ObjectRecord& ensure_lost_found_locked();

    void load_store();
    void persist_locked(const ObjectRecord& record);
    void unpersist_locked(const std::string& object_id);
};

// Rights sources combined as `(a) && (b) && ...`. Every component must be a
// single expression; returns nullopt when one is not.
std::optional<std::string> conjoin_rights(const std::vector<std::string>& sources);

} // namespace codecap

#endif
