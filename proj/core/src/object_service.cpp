/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "codecap/object_service.hpp"

#include <algorithm>
#include <fstream>

#include "codecap/error.hpp"

namespace codecap {

namespace {

constexpr std::size_t kObjectIdBytes = 16;
constexpr std::int64_t kLostFoundRowDepth = 2;

constexpr std::string_view kAttrOffset = "offset";
constexpr std::string_view kAttrLength = "length";
constexpr std::string_view kAttrValue = "value";
constexpr std::string_view kAttrName = "name";
constexpr std::string_view kAttrGroup = "group";
constexpr std::string_view kAttrRow = "row";
constexpr std::string_view kAttrKind = "kind";
constexpr std::string_view kAttrTargetPubkey = "targetPubkey";
constexpr std::string_view kAttrRights = "rights";
constexpr std::string_view kAttrRightsForCreator = "rightsForCreator";
constexpr std::string_view kAttrPLength = "pLength";
constexpr std::string_view kRowRightsPrefix = "rights.";

bool valid_object_id(std::string_view id) {
    if (id.empty() || id.size() > 128) return false;
    for (char c : id) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '.' || c == '_' || c == '+' || c == '-';
        if (!ok) return false;
    }
    return id != "." && id != "..";
}

bool requires_object(std::string_view type) {
    return type == "READ" || type == "WRITE" || type == "DESTROY" || type == "BUMPVERSION" ||
           type == "REGISTERLINK" || type == "LOOKUP" || type == "CHMOD" || type == "INSERT" ||
           type == "REMOVE" || type == "LIST";
}

bool is_directory_verb(std::string_view type) {
    return type == "LOOKUP" || type == "CHMOD" || type == "INSERT" || type == "REMOVE" ||
           type == "LIST";
}

// Row-level failures from the directory table map onto request statuses.
Status status_for_dir_error(std::string_view message) {
    if (message == "no such name" || message == "no such group") return Status::not_found;
    return Status::bad_request;
}

Bytes to_bytes(std::string_view text) { return Bytes(text.begin(), text.end()); }

std::optional<Bytes> value_attr_bytes(const RequestCert& r) {
    const AttrValue* value = r.find(kAttrValue);
    if (value == nullptr) return std::nullopt;
    if (const auto* s = std::get_if<std::string>(value)) return to_bytes(*s);
    if (const auto* b = std::get_if<Bytes>(value)) return *b;
    return std::nullopt;
}

} // namespace

Response Response::success(Bytes payload, std::string message) {
    Response r;
    r.status = Status::ok;
    r.payload = std::move(payload);
    r.message = std::move(message);
    return r;
}

Response Response::failure(Status status, std::string message) {
    Response r;
    r.status = status;
    r.message = std::move(message);
    return r;
}

std::optional<std::string> conjoin_rights(const std::vector<std::string>& sources) {
    if (sources.empty()) return std::nullopt;
    std::string out;
    for (const auto& src : sources) {
        if (!rfl::parses_as_expression(src)) return std::nullopt;
        if (!out.empty()) out += " && ";
        out += "(" + src + ")";
    }
    return out;
}

ObjectService::ObjectService(ServiceConfig config)
    : config_(std::move(config)), clock_(unix_now) {
    if (config_.step_budget < 1) throw Error("step budget must be at least 1");
    if (config_.gc_period <= 0) throw Error("gc period must be positive");
    load_store();
}

void ObjectService::set_clock(std::function<std::int64_t()> clock) {
    std::lock_guard lock(mu_);
    clock_ = clock ? std::move(clock) : unix_now;
}

std::int64_t ObjectService::now() const {
    std::lock_guard lock(mu_);
    return clock_();
}

void ObjectService::set_link_prober(LinkProber prober) {
    std::lock_guard lock(mu_);
    prober_ = std::move(prober);
}

Response ObjectService::handle_request(const Heritage& h, const RequestCert& r,
                                       std::optional<PublicKey> transport_pub) {
    std::lock_guard lock(mu_);
    std::int64_t now = clock_();

    if (r.type().empty()) return Response::failure(Status::bad_request, "request has no type");
    auto nonce = r.get_string(attr::kNonce);
    auto timestamp = r.get_int(attr::kTimestamp);
    if (!nonce || !timestamp) {
        return Response::failure(Status::bad_request, "request needs nonce and timestamp");
    }
    if (*timestamp < now - config_.replay_window || *timestamp > now + config_.replay_window) {
        return Response::failure(Status::bad_request, "request timestamp is outside the window");
    }
    auto signer = r.signer_pubkey();
    if (!signer) {
        return Response::failure(Status::bad_request, "request has no well-formed signerPubkey");
    }
    prune_nonces_locked(now);
    if (nonces_.contains({signer->hex(), *nonce})) {
        return Response::failure(Status::conflict, "replay");
    }

    std::string object_id;
    if (!h.empty()) object_id = h.certs.front().get_string(attr::kObjectId).value_or("");
    ObjectRecord* target = nullptr;
    if (!object_id.empty()) {
        target = find_locked(object_id);
        if (target == nullptr) return Response::failure(Status::not_found, "unknown object");
    }
    const std::string type = r.type();
    if (requires_object(type) && target == nullptr) {
        return Response::failure(Status::bad_request, "capability is not object-scoped");
    }

    AuthzOptions options;
    options.transport_pub = transport_pub;
    options.allow_unauthenticated_transport = config_.allow_unauthenticated_transport;
    options.now = now;
    if (target != nullptr) options.state = state_record(*target);
    options.budget = config_.step_budget;
    options.version_of = [this](std::string_view id) { return version_of_locked(id); };

    Decision decision = authorize(public_key(), h, r, options);
    if (!decision.allowed) {
        std::string message = "denied at " + decision.stage_label();
        if (!decision.detail.empty()) message += ": " + decision.detail;
        return Response::failure(Status::denied, message);
    }

    nonces_.emplace(std::make_pair(signer->hex(), *nonce), now);
    return dispatch_locked(target, h, r, now);
}

Response ObjectService::dispatch_locked(ObjectRecord* target, const Heritage& h,
                                        const RequestCert& r, std::int64_t now) {
    const std::string type = r.type();
    if (type == "READ") return handle_read(*target, r);
    if (type == "WRITE") return handle_write(*target, r);
    if (type == "CREATE") return handle_create(r, now);
    if (type == "DESTROY") {
        destroy_locked(target->object_id);
        return Response::success({}, "destroyed");
    }
    if (type == "BUMPVERSION") return handle_bump(*target, h, r);
    if (type == "DELEGATEONBEHALF") return handle_delegate_on_behalf(target, h, r);
    if (type == "REGISTERLINK") return handle_register_link(*target, r, now);
    if (is_directory_verb(type)) return handle_directory_verb(*target, r);
    return Response::failure(Status::bad_request, "unsupported request");
}

Response ObjectService::handle_read(const ObjectRecord& record, const RequestCert& r) {
    std::int64_t offset = 0;
    if (r.find(kAttrOffset) != nullptr) {
        auto value = r.get_int(kAttrOffset);
        if (!value || *value < 0) {
            return Response::failure(Status::bad_request, "offset must be a nonnegative integer");
        }
        offset = *value;
    }
    std::optional<std::int64_t> length;
    if (r.find(kAttrLength) != nullptr) {
        auto value = r.get_int(kAttrLength);
        if (!value || *value < 0) {
            return Response::failure(Status::bad_request, "length must be a nonnegative integer");
        }
        length = *value;
    }
    auto size = static_cast<std::int64_t>(record.state.size());
    std::int64_t start = std::min(offset, size);
    std::int64_t count = size - start;
    if (length) count = std::min(count, *length);
    Bytes payload(record.state.begin() + start, record.state.begin() + start + count);
    return Response::success(std::move(payload));
}

Response ObjectService::handle_write(ObjectRecord& record, const RequestCert& r) {
    auto value = value_attr_bytes(r);
    if (!value) {
        return Response::failure(Status::bad_request, "WRITE needs a string or bytes value");
    }
    if (r.find(kAttrOffset) == nullptr) {
        record.state = std::move(*value);
    } else {
        auto offset = r.get_int(kAttrOffset);
        if (!offset || *offset < 0) {
            return Response::failure(Status::bad_request, "offset must be a nonnegative integer");
        }
        auto start = static_cast<std::size_t>(*offset);
        if (start + value->size() > record.state.size()) {
            record.state.resize(start + value->size(), 0);
        }
        std::copy(value->begin(), value->end(), record.state.begin() + static_cast<long>(start));
    }
    persist_locked(record);
    return Response::success({}, "written");
}

Response ObjectService::handle_create(const RequestCert& r, std::int64_t now) {
    auto rights = r.get_string(kAttrRightsForCreator);
    if (!rights) {
        return Response::failure(Status::bad_request, "CREATE needs a rightsForCreator string");
    }
    auto p_length = r.get_int(kAttrPLength);
    if (!p_length || *p_length < 0) {
        return Response::failure(Status::bad_request, "CREATE needs a nonnegative pLength");
    }
    Bytes initial;
    if (auto kind = r.get_string(kAttrKind)) {
        if (*kind == "directory") {
            initial = encode_table(DirectoryTable{});
        } else {
            return Response::failure(Status::bad_request, "unknown object kind '" + *kind + "'");
        }
    }
    auto creator = r.signer_pubkey();
    if (!creator) {
        return Response::failure(Status::bad_request, "request has no well-formed signerPubkey");
    }
    std::string object_id = random_hex(kObjectIdBytes);
    Heritage minted;
    try {
        minted = mint_root(config_.service_key, *creator, *rights, *p_length, object_id, 0);
    } catch (const Error& e) {
        return Response::failure(Status::bad_request, e.what());
    }
    ObjectRecord record;
    record.object_id = object_id;
    record.version = 0;
    record.state = std::move(initial);
    record.created_at = now;
    persist_locked(record);
    objects_.emplace(object_id, std::move(record));
    return Response::success(to_bytes(encode_heritage(minted)), object_id);
}

Response ObjectService::handle_bump(ObjectRecord& record, const Heritage& h,
                                    const RequestCert& r) {
    std::vector<std::string> sources;
    for (const auto& cert : h.certs) sources.push_back(cert.rights_source());
    auto combined = conjoin_rights(sources);
    if (!combined) {
        return Response::failure(Status::bad_request,
                                 "cannot combine program-form rights functions");
    }
    auto depth = h.certs.back().p_length();
    auto signer = r.signer_pubkey();
    if (!depth || !signer) {
        return Response::failure(Status::bad_request, "malformed heritage tail");
    }
    record.version += 1;
    Heritage reminted = mint_root(config_.service_key, *signer, *combined, *depth,
                                  record.object_id, record.version);
    persist_locked(record);
    return Response::success(to_bytes(encode_heritage(reminted)),
                             std::to_string(record.version));
}

Response ObjectService::handle_delegate_on_behalf(ObjectRecord* target, const Heritage& h,
                                                  const RequestCert& r) {
    auto target_hex = r.get_string(kAttrTargetPubkey);
    if (!target_hex) {
        return Response::failure(Status::bad_request, "DELEGATEONBEHALF needs a targetPubkey");
    }
    auto target_pub = PublicKey::try_from_hex(*target_hex);
    if (!target_pub) {
        return Response::failure(Status::bad_request, "targetPubkey must be 64 hex characters");
    }
    auto requested = r.get_string(kAttrRights);
    if (!requested || !rfl::parses_as_expression(*requested)) {
        return Response::failure(Status::bad_request,
                                 "rights must be a single-expression rights function");
    }
    auto p_length = r.get_int(kAttrPLength);
    auto depth = h.certs.back().p_length();
    if (!p_length || !depth || *p_length < 0 || *p_length >= *depth) {
        return Response::failure(Status::bad_request,
                                 "pLength must be less than the remaining delegation depth");
    }
    std::vector<std::string> sources;
    for (const auto& cert : h.certs) sources.push_back(cert.rights_source());
    sources.push_back(*requested);
    auto combined = conjoin_rights(sources);
    if (!combined) {
        return Response::failure(Status::bad_request,
                                 "cannot combine program-form rights functions");
    }
    Heritage minted;
    if (target != nullptr) {
        minted = mint_root(config_.service_key, *target_pub, *combined, *p_length,
                           target->object_id, target->version);
    } else {
        minted = mint_service_root(config_.service_key, *target_pub, *combined, *p_length);
    }
    return Response::success(to_bytes(encode_heritage(minted)));
}

Response ObjectService::handle_register_link(ObjectRecord& record, const RequestCert& r,
                                             std::int64_t now) {
    auto armor = r.get_string(kAttrValue);
    if (!armor) {
        return Response::failure(Status::bad_request, "REGISTERLINK needs an armored heritage");
    }
    Heritage link_heritage;
    try {
        link_heritage = decode_heritage(*armor);
    } catch (const Error& e) {
        return Response::failure(Status::bad_request,
                                 std::string("link heritage does not decode: ") + e.what());
    }
    auto root = link_heritage.certs.front().issuer_pubkey();
    if (!root) {
        return Response::failure(Status::bad_request, "link heritage has no well-formed root");
    }
    auto report = validate_heritage(*root, link_heritage, now);
    if (!report.ok()) {
        return Response::failure(Status::bad_request,
                                 "link heritage does not validate: " + report.detail);
    }
    auto tail = link_heritage.certs.back().subject_pubkey();
    if (!tail || *tail != public_key()) {
        return Response::failure(Status::bad_request,
                                 "link heritage must terminate at this service's key");
    }
    auto name = r.get_string(kAttrName);
    if (!name || !valid_row_name(*name)) {
        return Response::failure(Status::bad_request, "REGISTERLINK needs a valid row name");
    }
    std::string group = r.get_string(kAttrGroup).value_or("");
    record.primary_links.push_back(PrimaryLink{std::move(link_heritage), *name, group});
    persist_locked(record);
    return Response::success({}, "link registered");
}

Response ObjectService::handle_directory_verb(ObjectRecord& record, const RequestCert& r) {
    DirectoryTable table;
    try {
        table = decode_table(record.state);
    } catch (const Error&) {
        return Response::failure(Status::bad_request, "not a directory");
    }
    const std::string type = r.type();

    if (type == "LOOKUP") {
        auto name = r.get_string(kAttrName);
        auto group = r.get_string(kAttrGroup);
        if (!name || !group) {
            return Response::failure(Status::bad_request, "LOOKUP needs name and group");
        }
        auto requester = r.signer_pubkey();
        if (!requester) {
            return Response::failure(Status::bad_request, "request has no well-formed signer");
        }
        try {
            Heritage extended =
                table_lookup(table, config_.service_key, *requester, *name, *group);
            return Response::success(to_bytes(encode_heritage(extended)));
        } catch (const Error& e) {
            return Response::failure(status_for_dir_error(e.what()), e.what());
        }
    }
    if (type == "CHMOD") {
        auto row = r.get_string(kAttrRow);
        auto group = r.get_string(kAttrGroup);
        auto rights = r.get_string(kAttrValue);
        if (!row || !group || !rights) {
            return Response::failure(Status::bad_request, "CHMOD needs row, group, and value");
        }
        try {
            table_chmod(table, *row, *group, *rights);
        } catch (const Error& e) {
            return Response::failure(status_for_dir_error(e.what()), e.what());
        }
        record.state = encode_table(table);
        persist_locked(record);
        return Response::success({}, "rights updated");
    }
    if (type == "INSERT") {
        auto name = r.get_string(kAttrName);
        auto armor = r.get_string(kAttrValue);
        if (!name || !armor) {
            return Response::failure(Status::bad_request,
                                     "INSERT needs a name and an armored cap");
        }
        Heritage cap;
        try {
            cap = decode_heritage(*armor);
        } catch (const Error& e) {
            return Response::failure(Status::bad_request,
                                     std::string("cap does not decode: ") + e.what());
        }
        std::map<std::string, std::string> group_rights;
        for (const auto& [key, value] : r.attrs) {
            if (!key.starts_with(kRowRightsPrefix)) continue;
            const auto* src = std::get_if<std::string>(&value);
            if (src == nullptr) {
                return Response::failure(Status::bad_request,
                                         "group rights must be strings: " + key);
            }
            group_rights[key.substr(kRowRightsPrefix.size())] = *src;
        }
        try {
            table_insert(table, public_key(), *name, std::move(cap), group_rights);
        } catch (const Error& e) {
            return Response::failure(status_for_dir_error(e.what()), e.what());
        }
        record.state = encode_table(table);
        persist_locked(record);
        return Response::success({}, "row inserted");
    }
    if (type == "REMOVE") {
        auto name = r.get_string(kAttrName);
        if (!name) return Response::failure(Status::bad_request, "REMOVE needs a name");
        try {
            table_remove(table, *name);
        } catch (const Error& e) {
            return Response::failure(status_for_dir_error(e.what()), e.what());
        }
        record.state = encode_table(table);
        persist_locked(record);
        return Response::success({}, "row removed");
    }
    if (type == "LIST") {
        std::string out;
        for (const auto& entry : table_list(table)) {
            out += entry.name;
            out.push_back('\t');
            for (std::size_t i = 0; i < entry.groups.size(); ++i) {
                if (i > 0) out.push_back(',');
                out += entry.groups[i];
            }
            out.push_back('\n');
        }
        return Response::success(to_bytes(out));
    }
    return Response::failure(Status::bad_request, "unsupported request");
}

SweepReport ObjectService::gc_sweep() {
    struct WorkItem {
        std::string object_id;
        std::vector<PrimaryLink> links;
    };
    std::vector<WorkItem> work;
    LinkProber prober;
    {
        std::lock_guard lock(mu_);
        prober = prober_;
        for (const auto& [id, record] : objects_) {
            if (!record.primary_links.empty()) work.push_back({id, record.primary_links});
        }
    }

    SweepReport report;
    for (const auto& item : work) {
        bool live = false;
        bool unreachable = false;
        std::vector<std::size_t> lost;
        for (std::size_t i = 0; i < item.links.size() && !live; ++i) {
            ProbeOutcome outcome =
                prober ? prober(item.links[i]) : probe_link(item.links[i]);
            switch (outcome.result) {
                case ProbeResult::found:
                    if (outcome.heritage && !outcome.heritage->empty() &&
                        outcome.heritage->certs.front()
                                .get_string(attr::kObjectId)
                                .value_or("") == item.object_id) {
                        live = true;
                    }
                    break;
                case ProbeResult::no_such_name:
                    break;
                case ProbeResult::no_such_directory:
                    lost.push_back(i);
                    break;
                case ProbeResult::unreachable:
                    unreachable = true;
                    break;
            }
        }

        std::lock_guard lock(mu_);
        ObjectRecord* record = find_locked(item.object_id);
        if (record == nullptr) continue;
        if (live || unreachable) {
            report.persisted.push_back(item.object_id);
        } else if (!lost.empty()) {
            move_to_lost_found_locked(*record, lost);
            report.moved_to_lost_found.push_back(item.object_id);
        } else {
            destroy_locked(item.object_id);
            report.destroyed.push_back(item.object_id);
        }
    }
    return report;
}

ProbeOutcome ObjectService::probe_link(const PrimaryLink& link) {
    const Heritage& dh = link.directory_heritage;
    if (dh.empty()) return {};
    auto root = dh.certs.front().issuer_pubkey();
    if (!root || *root != public_key()) return {};
    auto dir_id = dh.certs.front().get_string(attr::kObjectId).value_or("");
    if (dir_id.empty()) return {};

    std::lock_guard lock(mu_);
    ObjectRecord* dir = find_locked(dir_id);
    if (dir == nullptr) return {ProbeResult::no_such_directory, std::nullopt};
    DirectoryTable table;
    try {
        table = decode_table(dir->state);
    } catch (const Error&) {
        return {ProbeResult::no_such_directory, std::nullopt};
    }
    const DirectoryRow* row = table.find_row(link.row_name);
    if (row == nullptr) return {ProbeResult::no_such_name, std::nullopt};
    return {ProbeResult::found, row->cap};
}

void ObjectService::move_to_lost_found_locked(ObjectRecord& record,
                                              const std::vector<std::size_t>& lost) {
    ObjectRecord& lf = ensure_lost_found_locked();
    DirectoryTable table = decode_table(lf.state);
    Heritage row_cap = mint_root(config_.service_key, public_key(), "1", kLostFoundRowDepth,
                                 record.object_id, record.version);
    table_insert(table, public_key(), record.object_id, std::move(row_cap), {});
    lf.state = encode_table(table);
    persist_locked(lf);

    Heritage lf_cap = mint_root(config_.service_key, public_key(), "1", kLostFoundRowDepth,
                                lf.object_id, lf.version);
    std::vector<PrimaryLink> kept;
    for (std::size_t i = 0; i < record.primary_links.size(); ++i) {
        if (std::find(lost.begin(), lost.end(), i) == lost.end()) {
            kept.push_back(record.primary_links[i]);
        }
    }
    kept.push_back(PrimaryLink{std::move(lf_cap), record.object_id, ""});
    record.primary_links = std::move(kept);
    persist_locked(record);
}

ObjectRecord& ObjectService::ensure_lost_found_locked() {
    const std::string& id = config_.lost_found_directory;
    if (ObjectRecord* existing = find_locked(id)) return *existing;
    destroyed_.erase(id);
    ObjectRecord record;
    record.object_id = id;
    record.state = encode_table(DirectoryTable{});
    record.created_at = clock_();
    persist_locked(record);
    auto [it, _] = objects_.emplace(id, std::move(record));
    return it->second;
}

std::string ObjectService::create_object(Bytes state, std::optional<std::string> object_id) {
    std::lock_guard lock(mu_);
    return create_locked(std::move(state), std::move(object_id));
}

std::string ObjectService::create_directory(std::optional<std::string> object_id) {
    std::lock_guard lock(mu_);
    return create_locked(encode_table(DirectoryTable{}), std::move(object_id));
}

void ObjectService::write_object_state(std::string_view object_id, Bytes state) {
    std::lock_guard lock(mu_);
    ObjectRecord* record = find_locked(object_id);
    if (record == nullptr) throw Error("unknown object '" + std::string(object_id) + "'");
    record->state = std::move(state);
    persist_locked(*record);
}

void ObjectService::register_link(std::string_view object_id, PrimaryLink link) {
    std::lock_guard lock(mu_);
    ObjectRecord* record = find_locked(object_id);
    if (record == nullptr) throw Error("unknown object '" + std::string(object_id) + "'");
    record->primary_links.push_back(std::move(link));
    persist_locked(*record);
}

Heritage ObjectService::mint_for(const PublicKey& subject, std::string_view rights_src,
                                 std::int64_t p_length, std::string_view object_id,
                                 const MintOptions& options) {
    std::lock_guard lock(mu_);
    ObjectRecord* record = find_locked(object_id);
    if (record == nullptr) throw Error("unknown object '" + std::string(object_id) + "'");
    return mint_root(config_.service_key, subject, rights_src, p_length, object_id,
                     record->version, options);
}

Heritage ObjectService::mint_factory(const PublicKey& subject, std::string_view rights_src,
                                     std::int64_t p_length, const MintOptions& options) {
    return mint_service_root(config_.service_key, subject, rights_src, p_length, options);
}

std::optional<ObjectRecord> ObjectService::object(std::string_view object_id) const {
    std::lock_guard lock(mu_);
    auto it = objects_.find(object_id);
    if (it == objects_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> ObjectService::object_ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> ids;
    ids.reserve(objects_.size());
    for (const auto& [id, _] : objects_) ids.push_back(id);
    return ids;
}

std::optional<std::int64_t> ObjectService::version_of(std::string_view object_id) const {
    std::lock_guard lock(mu_);
    return version_of_locked(object_id);
}

ObjectRecord* ObjectService::find_locked(std::string_view object_id) {
    auto it = objects_.find(object_id);
    return it == objects_.end() ? nullptr : &it->second;
}

std::optional<std::int64_t> ObjectService::version_of_locked(std::string_view object_id) const {
    auto it = objects_.find(object_id);
    if (it == objects_.end()) return std::nullopt;
    return it->second.version;
}

std::string ObjectService::create_locked(Bytes state, std::optional<std::string> object_id) {
    std::string id = object_id.value_or(random_hex(kObjectIdBytes));
    if (!valid_object_id(id)) throw Error("invalid object id '" + id + "'");
    if (objects_.contains(id) || destroyed_.contains(id)) {
        throw Error("object id '" + id + "' already in use");
    }
    ObjectRecord record;
    record.object_id = id;
    record.state = std::move(state);
    record.created_at = clock_();
    persist_locked(record);
    objects_.emplace(id, std::move(record));
    return id;
}

// Takes the id by value: callers often pass the key of the record being
// erased, which a reference would leave dangling.
void ObjectService::destroy_locked(std::string object_id) {
    if (objects_.erase(object_id) > 0) {
        unpersist_locked(object_id);
        destroyed_.insert(std::move(object_id));
    }
}

void ObjectService::prune_nonces_locked(std::int64_t now) {
    std::erase_if(nonces_, [&](const auto& entry) {
        return entry.second < now - 2 * config_.replay_window;
    });
}

rfl::Value ObjectService::state_record(const ObjectRecord& record) const {
    rfl::Value::Record fields;
    fields.emplace("length", rfl::Value(static_cast<std::int64_t>(record.state.size())));
    std::string body(record.state.begin(), record.state.end());
    if (is_valid_utf8(body)) fields.emplace("body", rfl::Value(std::move(body)));
    return rfl::Value::record(std::move(fields));
}

void ObjectService::load_store() {
    if (config_.data_dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(config_.data_dir, ec);
    for (const auto& entry : std::filesystem::directory_iterator(config_.data_dir, ec)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".obj") continue;
        try {
            std::ifstream in(entry.path(), std::ios::binary);
            Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            AttrMap attrs = canonical_decode(bytes);
            ObjectRecord record;
            record.object_id = std::get<std::string>(attrs.at("objectId"));
            record.version = std::get<std::int64_t>(attrs.at("version"));
            record.state = std::get<Bytes>(attrs.at("state"));
            record.created_at = std::get<std::int64_t>(attrs.at("createdAt"));
            auto count = std::get<std::int64_t>(attrs.at("links.count"));
            for (std::int64_t i = 0; i < count; ++i) {
                std::string prefix = "links." + std::to_string(i) + ".";
                PrimaryLink link;
                link.directory_heritage =
                    decode_heritage(std::get<std::string>(attrs.at(prefix + "heritage")));
                link.row_name = std::get<std::string>(attrs.at(prefix + "name"));
                link.group = std::get<std::string>(attrs.at(prefix + "group"));
                record.primary_links.push_back(std::move(link));
            }
            if (record.object_id != entry.path().stem().string()) continue;
            objects_.emplace(record.object_id, std::move(record));
        } catch (const std::exception&) {
            // Partially written or foreign files are ignored at startup.
            continue;
        }
    }
}

void ObjectService::persist_locked(const ObjectRecord& record) {
    if (config_.data_dir.empty()) return;
    AttrMap attrs;
    attrs["objectId"] = record.object_id;
    attrs["version"] = record.version;
    attrs["state"] = record.state;
    attrs["createdAt"] = record.created_at;
    attrs["links.count"] = static_cast<std::int64_t>(record.primary_links.size());
    for (std::size_t i = 0; i < record.primary_links.size(); ++i) {
        std::string prefix = "links." + std::to_string(i) + ".";
        attrs[prefix + "heritage"] = encode_heritage(record.primary_links[i].directory_heritage);
        attrs[prefix + "name"] = record.primary_links[i].row_name;
        attrs[prefix + "group"] = record.primary_links[i].group;
    }
    Bytes bytes = canonical_encode(attrs);
    auto tmp = config_.data_dir / (record.object_id + ".obj.tmp");
    auto final_path = config_.data_dir / (record.object_id + ".obj");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("failed to write object file for '" + record.object_id + "'");
    }
    std::filesystem::rename(tmp, final_path);
}

void ObjectService::unpersist_locked(const std::string& object_id) {
    if (config_.data_dir.empty()) return;
    std::error_code ec;
    std::filesystem::remove(config_.data_dir / (object_id + ".obj"), ec);
}

} // namespace codecap
