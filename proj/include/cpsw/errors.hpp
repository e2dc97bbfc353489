#pragma once

#include <stdexcept>
#include <string>

namespace cpsw {

// Machine-checkable failure categories. The CLI maps Error to exit code 1
// (computational failure) or 2 (usage/config), everything else to 1.
enum class ErrorCode {
    cycle_detected,
    unknown_node,
    duplicate_edge,
    overlapping_query,
    domain_too_large,
    value_out_of_domain,
    zero_conditioning_event,
    positivity_violation,
    descendant_in_t,
    dimension_mismatch,
    invalid_delta,
    too_few_points,
    empty_input,
    misaligned_samples,
    index_out_of_range,
    shape_mismatch,
    empty_batch,
    missing_weights,
    missing_twins,
    config_invalid,
    non_finite_loss,
    file_not_found,
    invalid_spec,
    bad_magic,
    truncated_file,
    count_mismatch,
    invalid_split,
    invalid_confidence,
    zero_propensity,
    scenario_invalid,
    parse_error,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

} // namespace cpsw
