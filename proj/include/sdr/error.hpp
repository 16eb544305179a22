#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace sdr {

/// Bad shapes, bad sizes, out-of-range arguments.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A NaN/Inf appeared in a loss, gradient or callback value.
///
/// When the failure can be attributed to one sample of a batch the index is
/// carried along so the caller can report it.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what,
                          std::optional<std::size_t> sample = std::nullopt)
      : std::runtime_error(sample ? what + " (sample " + std::to_string(*sample) + ")" : what),
        sample_(sample) {}

  std::optional<std::size_t> sample_index() const noexcept { return sample_; }

 private:
  std::optional<std::size_t> sample_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file parsed, but its content does not describe a valid object.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sdr
