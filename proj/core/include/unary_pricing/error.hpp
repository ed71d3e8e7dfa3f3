#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace unary_pricing {

enum class Errc {
  invalid_params,
  degenerate_range,
  invalid_n,
  invalid_length,
  dimension_mismatch,
  inconsistent_records,
};

std::string_view to_string(Errc code) noexcept;

/// Exception type thrown by every library routine on a violated precondition.
/// The message is prefixed with the error kind, e.g. "invalid-params: sigma must be > 0".
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace unary_pricing
