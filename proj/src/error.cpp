#include "sfofr/error.hpp"

namespace sfofr {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::rank_deficient: return "rank_deficient";
    case ErrorCode::numerical_failure: return "numerical_failure";
    case ErrorCode::missing_file: return "missing_file";
    case ErrorCode::schema_violation: return "schema_violation";
    case ErrorCode::missing_spatial_metadata: return "missing_spatial_metadata";
    case ErrorCode::outside_mesh: return "outside_mesh";
  }
  return "unknown";
}

}  // namespace sfofr
