#pragma once

#include <stdexcept>
#include <string>

namespace rankalign {

// Bad input data or a model/data mismatch. The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The δ threshold left no usable pair in the given rows.
class EmptyPairSetError : public DataError {
 public:
  EmptyPairSetError(const std::string& what, double delta) : DataError(what), delta_(delta) {}
  double delta() const noexcept { return delta_; }

 private:
  double delta_;
};

}  // namespace rankalign
