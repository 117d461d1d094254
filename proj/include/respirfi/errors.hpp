#pragma once

#include <stdexcept>
#include <string>

namespace respirfi {

// Error categories used across the library. I/O validation, DSP
// preconditions and pipeline-stage failures all throw Error; the
// orchestration layer maps them to per-window reason codes.
enum class Err {
    malformed_header,
    non_monotonic_time,
    freq_order,
    dimension_mismatch,
    invalid_value,
    io_failure,
    bad_window,
    span_too_small,
    zero_variance,
    too_short,
    zero_norm,
    span_too_wide,
    invalid_scene,
    all_subcarriers_degenerate,
    no_viable_subcarriers,
    empty_partition,
    set_too_small,
    ambiguous_trend,
    no_breaths_found,
    phase_unresolved,
    too_few,
    no_overlap,
};

class Error : public std::runtime_error {
public:
    Error(Err code, const std::string& what_arg)
        : std::runtime_error(what_arg), code_(code) {}

    Err code() const noexcept { return code_; }

private:
    Err code_;
};

const char* err_name(Err code);

} // namespace respirfi
