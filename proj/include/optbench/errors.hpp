#pragma once

#include <stdexcept>

namespace optbench {

// One exception type per failure class surfaced through the public API.
struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ImputeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SplitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FoldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace optbench
