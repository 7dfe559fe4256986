#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bridgex {

enum class Errc {
    invalid_argument,
    total_mass_zero,
    no_bracket,
    degenerate_interval,
    invalid_extremum,
    infeasible_constraint,
    unstable_step,
    zero_denominator,
    infeasible_step,
    degenerate_scale,
    domain_error,
    singular_block,
    quadrature_failure,
    insufficient_samples,
    config_error,
};

std::string_view to_string(Errc code) noexcept;

/// Library-wide exception. Every failure path in bridgex throws this type,
/// tagged with the condition that caused it.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace bridgex
