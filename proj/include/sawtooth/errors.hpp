#pragma once

#include <stdexcept>
#include <string>

namespace sawtooth {

/// Parameter value outside the supported region (distinct subtypes below so
/// callers can react to the specific violated precondition).
class param_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// alpha = 1 (log-utility limit) is rejected, never approximated.
class alpha_one_error : public param_error {
public:
    alpha_one_error() : param_error("alpha = 1 is unsupported (log-utility limit)") {}
};

/// lambda <= 0 where a strictly positive aggregated price is required.
class zero_price_error : public param_error {
public:
    zero_price_error() : param_error("lambda must be > 0 for threshold computation") {}
};

/// 2 - alpha - gamma = 0 makes the closed-form threshold degenerate.
class degenerate_exponent_error : public param_error {
public:
    degenerate_exponent_error()
        : param_error("2 - alpha - gamma = 0: threshold formula is degenerate") {}
};

/// Parameter combination outside what an operation supports (e.g. the
/// discounted solver requires gamma = 0 and alpha in (1,2)).
class unsupported_param_error : public param_error {
public:
    using param_error::param_error;
};

/// Malformed simulation or network configuration.
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical procedure failed to converge; message carries diagnostics.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sign-change scan found no root of H.
class no_root_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sign-change scan found more than one +/- crossing of H.
class ambiguous_root_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sawtooth
