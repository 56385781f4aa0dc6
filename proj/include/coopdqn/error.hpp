#pragma once

#include <stdexcept>
#include <string>

namespace coopdqn {

/// Invalid configuration or inconsistent inputs detected before any work is done.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A randomized graph construction gave up after its retry budget.
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values reached a place where they indicate an upstream numerical bug.
class NumericFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

} // namespace detail
} // namespace coopdqn
