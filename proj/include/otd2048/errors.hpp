#pragma once

#include <stdexcept>
#include <string>

namespace otd {

/// Malformed or inconsistent configuration (geometry, cardinality, run config).
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unreadable/unwritable file or a weight file that does not parse.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace otd
