#pragma once

#include <stdexcept>
#include <string>

namespace skrl {

struct invalid_dimension_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct resource_limit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct domain_violation_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct degenerate_weight_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct numerical_failure_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace skrl
