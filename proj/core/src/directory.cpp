/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "codecap/directory.hpp"

#include <algorithm>

#include "codecap/codecap.hpp"
#include "codecap/error.hpp"

namespace codecap {

namespace {

constexpr std::string_view kKindKey = "kind";
constexpr std::string_view kKindValue = "directory";
constexpr std::string_view kGroupCountKey = "groups.count";
constexpr std::string_view kGroupPrefix = "groups.";
constexpr std::string_view kRowPrefix = "row.";
constexpr std::string_view kCapSuffix = ".cap";
constexpr std::string_view kRightsInfix = ".rights.";

std::string row_cap_key(std::string_view name) {
    return std::string(kRowPrefix) + std::string(name) + std::string(kCapSuffix);
}

std::string row_rights_key(std::string_view name, std::string_view group) {
    return std::string(kRowPrefix) + std::string(name) + std::string(kRightsInfix) +
           std::string(group);
}

const std::string& require_string(const AttrMap& attrs, const std::string& key) {
    auto it = attrs.find(key);
    if (it == attrs.end()) throw Error("directory state: missing attribute '" + key + "'");
    const auto* s = std::get_if<std::string>(&it->second);
    if (s == nullptr) throw Error("directory state: attribute '" + key + "' must be a string");
    return *s;
}

} // namespace

const DirectoryRow* DirectoryTable::find_row(std::string_view name) const {
    for (const auto& row : rows) {
        if (row.name == name) return &row;
    }
    return nullptr;
}

DirectoryRow* DirectoryTable::find_row(std::string_view name) {
    for (auto& row : rows) {
        if (row.name == name) return &row;
    }
    return nullptr;
}

bool DirectoryTable::has_group(std::string_view group) const {
    return std::find(groups.begin(), groups.end(), group) != groups.end();
}

bool valid_group_name(std::string_view group) {
    if (group.empty() || group == "name" || group == "cap") return false;
    for (char c : group) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '_' || c == '-';
        if (!ok) return false;
    }
    return true;
}

bool valid_row_name(std::string_view name) {
    if (name.empty()) return false;
    for (char c : name) {
        if (c == '/' || c == '\0' || c == '\n') return false;
    }
    return true;
}

Bytes encode_table(const DirectoryTable& table) {
    AttrMap attrs;
    attrs[std::string(kKindKey)] = std::string(kKindValue);
    attrs[std::string(kGroupCountKey)] = static_cast<std::int64_t>(table.groups.size());
    std::vector<std::string> groups = table.groups;
    std::sort(groups.begin(), groups.end());
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (!valid_group_name(groups[i])) {
            throw Error("directory state: invalid group name '" + groups[i] + "'");
        }
        attrs[std::string(kGroupPrefix) + std::to_string(i)] = groups[i];
    }
    for (const auto& row : table.rows) {
        if (!valid_row_name(row.name)) {
            throw Error("directory state: invalid row name '" + row.name + "'");
        }
        attrs[row_cap_key(row.name)] = encode_heritage(row.cap);
        for (const auto& [group, rights] : row.group_rights) {
            if (std::find(groups.begin(), groups.end(), group) == groups.end()) {
                throw Error("directory state: row '" + row.name + "' uses undeclared group '" +
                            group + "'");
            }
            attrs[row_rights_key(row.name, group)] = rights;
        }
    }
    return canonical_encode(attrs);
}

DirectoryTable decode_table(const Bytes& state) {
    AttrMap attrs = canonical_decode(state);
    if (require_string(attrs, std::string(kKindKey)) != kKindValue) {
        throw Error("directory state: not a directory");
    }
    DirectoryTable table;
    auto count_it = attrs.find(std::string(kGroupCountKey));
    if (count_it == attrs.end() || !std::holds_alternative<std::int64_t>(count_it->second)) {
        throw Error("directory state: missing group count");
    }
    auto count = std::get<std::int64_t>(count_it->second);
    if (count < 0 || count > 4096) throw Error("directory state: implausible group count");
    for (std::int64_t i = 0; i < count; ++i) {
        const std::string& group =
            require_string(attrs, std::string(kGroupPrefix) + std::to_string(i));
        if (!valid_group_name(group)) {
            throw Error("directory state: invalid group name '" + group + "'");
        }
        table.groups.push_back(group);
    }

    std::map<std::string, DirectoryRow> rows;
    for (const auto& [key, value] : attrs) {
        if (!key.starts_with(kRowPrefix)) continue;
        std::string_view rest = std::string_view(key).substr(kRowPrefix.size());
        const auto* text = std::get_if<std::string>(&value);
        if (text == nullptr) {
            throw Error("directory state: attribute '" + key + "' must be a string");
        }
        if (rest.ends_with(kCapSuffix)) {
            std::string_view name = rest.substr(0, rest.size() - kCapSuffix.size());
            if (!valid_row_name(name)) {
                throw Error("directory state: invalid row name in '" + key + "'");
            }
            rows[std::string(name)].cap = decode_heritage(*text);
            continue;
        }
        auto split = rest.rfind(kRightsInfix);
        if (split == std::string_view::npos) {
            throw Error("directory state: unrecognized row attribute '" + key + "'");
        }
        std::string_view name = rest.substr(0, split);
        std::string_view group = rest.substr(split + kRightsInfix.size());
        if (!valid_row_name(name) || !valid_group_name(group)) {
            throw Error("directory state: unrecognized row attribute '" + key + "'");
        }
        if (std::find(table.groups.begin(), table.groups.end(), group) == table.groups.end()) {
            throw Error("directory state: row '" + std::string(name) +
                        "' uses undeclared group '" + std::string(group) + "'");
        }
        rows[std::string(name)].group_rights[std::string(group)] = *text;
    }
    for (auto& [name, row] : rows) {
        if (row.cap.empty()) {
            throw Error("directory state: row '" + name + "' has no cap column");
        }
        row.name = name;
        table.rows.push_back(std::move(row));
    }
    return table;
}

bool is_directory_state(const Bytes& state) {
    try {
        decode_table(state);
        return true;
    } catch (const Error&) {
        return false;
    }
}

Heritage table_lookup(const DirectoryTable& table, const KeyPair& dir_service_key,
                      const PublicKey& requester, std::string_view name, std::string_view group) {
    const DirectoryRow* row = table.find_row(name);
    if (row == nullptr) throw Error("no such name");
    if (!table.has_group(group)) throw Error("no such group");
    auto rights = row->group_rights.find(std::string(group));
    if (rights == row->group_rights.end()) throw Error("no such group");
    const Certificate& tail = row->cap.certs.back();
    auto depth = tail.p_length();
    if (!depth || *depth <= 0) throw Error("depth exhausted");
    return delegate(Codecap{row->cap, dir_service_key}, requester, rights->second, *depth - 1);
}

void table_chmod(DirectoryTable& table, std::string_view name, std::string_view group,
                 std::string_view rights_src) {
    DirectoryRow* row = table.find_row(name);
    if (row == nullptr) throw Error("no such name");
    if (!table.has_group(group)) throw Error("no such group");
    try {
        rfl::parse_program(rights_src);
    } catch (const rfl::ParseError& e) {
        throw Error(std::string("rights function does not parse: ") + e.what());
    }
    row->group_rights[std::string(group)] = std::string(rights_src);
}

void table_insert(DirectoryTable& table, const PublicKey& dir_service_pub, std::string_view name,
                  Heritage cap, const std::map<std::string, std::string>& group_rights) {
    if (!valid_row_name(name)) throw Error("invalid row name");
    if (cap.empty()) throw Error("cap heritage is empty");
    auto tail_pub = cap.certs.back().subject_pubkey();
    if (!tail_pub || *tail_pub != dir_service_pub) throw Error("cannot extend foreign cap");
    for (const auto& [group, rights] : group_rights) {
        if (!valid_group_name(group)) throw Error("invalid group name '" + group + "'");
        try {
            rfl::parse_program(rights);
        } catch (const rfl::ParseError& e) {
            throw Error("rights function for group '" + group + "' does not parse: " + e.what());
        }
    }
    for (const auto& [group, rights] : group_rights) {
        if (!table.has_group(group)) table.groups.push_back(group);
    }
    std::sort(table.groups.begin(), table.groups.end());
    DirectoryRow row{std::string(name), std::move(cap), group_rights};
    if (DirectoryRow* existing = table.find_row(name)) {
        *existing = std::move(row);
        return;
    }
    auto at = std::lower_bound(table.rows.begin(), table.rows.end(), name,
                               [](const DirectoryRow& r, std::string_view n) { return r.name < n; });
    table.rows.insert(at, std::move(row));
}

void table_remove(DirectoryTable& table, std::string_view name) {
    auto it = std::find_if(table.rows.begin(), table.rows.end(),
                           [&](const DirectoryRow& row) { return row.name == name; });
    if (it == table.rows.end()) throw Error("no such name");
    table.rows.erase(it);
}

std::vector<DirectoryEntry> table_list(const DirectoryTable& table) {
    std::vector<DirectoryEntry> entries;
    entries.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        DirectoryEntry entry;
        entry.name = row.name;
        for (const auto& [group, _] : row.group_rights) entry.groups.push_back(group);
        entries.push_back(std::move(entry));
    }
    return entries;
}

} // namespace codecap
