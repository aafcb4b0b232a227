/*
 * Copyright (C) 2026 Codecap Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef CODECAP_RFL_HPP
#define CODECAP_RFL_HPP

/*
 * RFL, the rights-function language: a loop-free expression language whose
 * programs decide whether a request is allowed. A program is a sequence of
 * `var name = expr;` bindings followed by one final expression (or the
 * `if (e) a; else b;` sugar for a ternary). Evaluation is pure, deterministic,
 * and step-bounded; any abnormal outcome denies.
 */

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "codecap/error.hpp"

namespace codecap::rfl {

inline constexpr std::int64_t kDefaultStepBudget = 10000;
inline constexpr std::size_t kMaxSourceBytes = 64 * 1024;
inline constexpr std::size_t kMaxStringBytes = 1024 * 1024;

// A runtime value: null, bool, int, string, list, or record. Lists and
// records are shared immutably, so copies are cheap.
class Value {
public:
    using List = std::vector<Value>;
    using Record = std::map<std::string, Value>;

    Value() = default;
    Value(bool b) : v_(b) {}
    Value(std::int64_t i) : v_(i) {}
    Value(int i) : v_(static_cast<std::int64_t>(i)) {}
    Value(std::string s) : v_(std::move(s)) {}
    Value(std::string_view s) : v_(std::string(s)) {}
    Value(const char* s) : v_(std::string(s)) {}

    static Value list(List items);
    static Value record(Record fields);

    bool is_null() const { return std::holds_alternative<std::monostate>(v_); }
    bool is_bool() const { return std::holds_alternative<bool>(v_); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
    bool is_string() const { return std::holds_alternative<std::string>(v_); }
    bool is_list() const;
    bool is_record() const;

    bool as_bool() const { return std::get<bool>(v_); }
    std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
    const std::string& as_string() const { return std::get<std::string>(v_); }
    const List& as_list() const;
    const Record& as_record() const;

    // Truthy: true, nonzero int, nonempty string, any list or record.
    bool truthy() const;

    bool operator==(const Value& other) const;

private:
    using ListPtr = std::shared_ptr<const List>;
    using RecordPtr = std::shared_ptr<const Record>;
    std::variant<std::monostate, bool, std::int64_t, std::string, ListPtr, RecordPtr> v_;
};

// Renders a value for diagnostics and machine output; not part of the
// language semantics.
std::string to_string(const Value& value);

// Evaluation inputs. `heritage` must be a list of records, `request` a
// record; `state` is a record or null depending on whether the hosting
// service supplies an object snapshot for the request type.
struct EvalContext {
    Value heritage = Value::list({});
    std::int64_t idx = 0;
    Value request = Value::record({});
    std::int64_t now = 0;
    Value state;
};

enum class Cause {
    normal,
    parse_error,
    runtime_error,
    step_budget_exceeded,
};

std::string_view cause_name(Cause cause);

struct EvalOutcome {
    bool allowed = false;
    Cause cause = Cause::normal;
    std::int64_t steps_used = 0;
    std::string detail;
};

class ParseError : public Error {
public:
    ParseError(int line, int col, const std::string& message);
    int line() const { return line_; }
    int col() const { return col_; }

private:
    int line_;
    int col_;
};

namespace detail {
struct Program;
}

// A parsed rights function. Holds the source and an immutable AST; values
// may be shared and evaluated concurrently.
struct RightsProgram {
    std::string source;
    std::shared_ptr<const detail::Program> ast;
};

// Parses a program, throwing ParseError with line/column on failure.
// Sources over kMaxSourceBytes are rejected.
RightsProgram parse_program(std::string_view source);

// True when the entire source is a single expression (no bindings, no
// if-form), so it can be embedded inside a larger expression verbatim.
bool parses_as_expression(std::string_view source);

// Runs a program to an outcome. Never throws for program misbehavior: parse
// or runtime faults and budget exhaustion all come back as a deny with the
// corresponding cause. Throws Error only for budget < 1.
EvalOutcome evaluate(const RightsProgram& program, const EvalContext& ctx,
                     std::int64_t budget = kDefaultStepBudget);

// Parse-and-evaluate convenience; parse failure yields cause parse_error.
EvalOutcome evaluate_source(std::string_view source, const EvalContext& ctx,
                            std::int64_t budget = kDefaultStepBudget);

struct BuiltinInfo {
    std::string_view name;
    int arity;
    std::string_view semantics;
};

// The complete, stable builtin set.
std::vector<BuiltinInfo> builtin_table();

} // namespace codecap::rfl

#endif
