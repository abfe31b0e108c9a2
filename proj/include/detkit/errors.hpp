#pragma once

#include <stdexcept>
#include <string>

namespace detkit {

// Bad input data or configuration (file schemas, flag values, dangling ids).
// The CLI maps this to exit code 1.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A violated internal contract; maps to exit code 2.
struct InvariantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace detkit
