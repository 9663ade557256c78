#pragma once

#include <stdexcept>
#include <string>

namespace hedgelab {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hedgelab
