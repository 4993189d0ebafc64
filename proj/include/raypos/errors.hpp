#pragma once

#include <stdexcept>
#include <string>

namespace raypos {

struct SceneLoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OriginOutsideSceneError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CalibrationMissingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Every cell score came out zero: no cell is crossed by rays of all BS.
struct NoCellScoredError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyScoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyResultsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace raypos
