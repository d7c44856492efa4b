#pragma once

#include <stdexcept>
#include <string>

namespace organoquant {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace organoquant

// Declares a concrete error type carrying a message.
#define ORQ_DEFINE_ERROR(NAME)                                  \
    class NAME : public ::organoquant::Error {                  \
    public:                                                     \
        using ::organoquant::Error::Error;                      \
    };
