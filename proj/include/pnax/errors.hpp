#pragma once

#include <stdexcept>
#include <string>

namespace pnax {

// Error categories map onto the CLI exit-code contract:
// input/config/schema -> exit 3, internal invariant -> exit 4.

class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

class schema_error : public std::runtime_error {
public:
    explicit schema_error(const std::string& msg) : std::runtime_error(msg) {}
};

class internal_error : public std::logic_error {
public:
    explicit internal_error(const std::string& msg) : std::logic_error(msg) {}
};

inline void check_internal(bool cond, const std::string& msg) {
    if (!cond) throw internal_error(msg);
}

}  // namespace pnax
