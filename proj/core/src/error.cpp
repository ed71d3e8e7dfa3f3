#include "unary_pricing/error.hpp"

namespace unary_pricing {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_params: return "invalid-params";
    case Errc::degenerate_range: return "degenerate-range";
    case Errc::invalid_n: return "invalid-n";
    case Errc::invalid_length: return "invalid-length";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::inconsistent_records: return "inconsistent-records";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace unary_pricing
