#ifndef PALS_ERRORS_HPP
#define PALS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pals {

// Problems with user-supplied data (files, columns, malformed cells).
class DataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Numerical failures that survive the built-in fallbacks.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace pals

#endif
