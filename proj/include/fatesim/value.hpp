// fatesim/value.hpp - scalar values and variable stores
#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>

namespace fatesim {

// Model variables hold integers or text; booleans only appear as
// intermediate results of guard evaluation.
using Value = std::variant<std::int64_t, std::string, bool>;

enum class ValueType { Integer, Text, Boolean };

inline ValueType type_of(const Value& v) {
    switch (v.index()) {
        case 0: return ValueType::Integer;
        case 1: return ValueType::Text;
        default: return ValueType::Boolean;
    }
}

inline const char* to_string(ValueType t) {
    switch (t) {
        case ValueType::Integer: return "int";
        case ValueType::Text: return "text";
        default: return "bool";
    }
}

inline std::int64_t as_int(const Value& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    if (const auto* b = std::get_if<bool>(&v)) return *b ? 1 : 0;
    throw std::runtime_error("value is not an integer");
}

inline const std::string& as_text(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    throw std::runtime_error("value is not text");
}

inline bool as_bool(const Value& v) {
    if (const auto* b = std::get_if<bool>(&v)) return *b;
    throw std::runtime_error("value is not boolean");
}

// Ordered map so that iteration (serialization, debugging) is deterministic.
using VarStore = std::map<std::string, Value>;

// Variable name -> declared type, fixed for the model's lifetime.
using Declarations = std::map<std::string, ValueType>;

// Reserved symbol naming the pool string selected by action dimension 2.
inline constexpr const char* kInputSymbol = "__input__";

}  // namespace fatesim
