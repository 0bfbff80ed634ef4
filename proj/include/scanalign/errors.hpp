#pragma once

#include <stdexcept>
#include <string>

namespace scanalign {

/// Bad or inconsistent input data (maps to CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two books share no usable anchors; usually a false duplicate.
class AlignmentImpossible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A book comparison had zero rated sentence pairs.
class EmptyComparison : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExternalScorerDied : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExternalTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scanalign
