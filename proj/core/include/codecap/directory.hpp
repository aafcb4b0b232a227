/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef CODECAP_DIRECTORY_HPP
#define CODECAP_DIRECTORY_HPP

/*
 * Directory tables: named rows mapping a name to a stored heritage plus one
 * rights-function column per group. Directories are ordinary objects whose
 * state is the encoded table; lookup performs restricted delegation by
 * extending the stored heritage with one certificate for the requester.
 */

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "codecap/cert.hpp"
#include "codecap/keys.hpp"

namespace codecap {

struct DirectoryRow {
    std::string name;
    Heritage cap;
    // Group name to rights-function source. Lookup in a group delegates with
    // that column's function.
    std::map<std::string, std::string> group_rights;

    bool operator==(const DirectoryRow&) const = default;
};

struct DirectoryTable {
    // Rows sorted by name; group columns sorted by name. `name` and `cap`
    // are reserved column names.
    std::vector<DirectoryRow> rows;
    std::vector<std::string> groups;

    const DirectoryRow* find_row(std::string_view name) const;
    DirectoryRow* find_row(std::string_view name);
    bool has_group(std::string_view group) const;

    bool operator==(const DirectoryTable&) const = default;
};

// Group names are one or more of [A-Za-z0-9_-]; dots are excluded so the
// encoded attribute names stay unambiguous. `name` and `cap` are reserved.
bool valid_group_name(std::string_view group);

// Row names are nonempty, free of '/', NUL, and newline so they can appear
// in paths and encoded attribute names.
bool valid_row_name(std::string_view name);

// Object-state codec. encode_table(decode_table(bytes)) is the identity on
// well-formed state; decode throws Error on anything else.
Bytes encode_table(const DirectoryTable& table);
DirectoryTable decode_table(const Bytes& state);
bool is_directory_state(const Bytes& state);

// Server-side verbs, applied by the hosting service after authorization.
// All throw Error with the failure message on bad input.

// Restricted delegation: extends the row's stored heritage by one
// certificate for `requester` carrying the group's rights function.
Heritage table_lookup(const DirectoryTable& table, const KeyPair& dir_service_key,
                      const PublicKey& requester, std::string_view name, std::string_view group);

void table_chmod(DirectoryTable& table, std::string_view name, std::string_view group,
                 std::string_view rights_src);

// Adds or replaces a row. The stored cap must terminate at the hosting
// service's key so lookups can extend it. Unknown groups become new columns.
void table_insert(DirectoryTable& table, const PublicKey& dir_service_pub, std::string_view name,
                  Heritage cap, const std::map<std::string, std::string>& group_rights);

void table_remove(DirectoryTable& table, std::string_view name);

struct DirectoryEntry {
    std::string name;
    std::vector<std::string> groups;

    bool operator==(const DirectoryEntry&) const = default;
};

// Names and their populated group columns; never the stored heritages.
std::vector<DirectoryEntry> table_list(const DirectoryTable& table);

} // namespace codecap

#endif
