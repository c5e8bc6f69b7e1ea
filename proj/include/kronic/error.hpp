#ifndef KRONIC_ERROR_HPP
#define KRONIC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace kronic {

/// Bad shapes, non-finite data, out-of-range options.
class InvalidArgument : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Operation is not defined for the given dimension or structure.
class Unsupported : public InvalidArgument
{
public:
  using InvalidArgument::InvalidArgument;
};

/// Base class for failures caused by the numbers rather than the inputs' form.
class NumericalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public NumericalError
{
public:
  DivergenceError(double time, double norm)
      : NumericalError("state diverged at t = " + std::to_string(time) + " (|x| = " + std::to_string(norm) + ")"),
        time_(time)
  {}

  [[nodiscard]] double time() const noexcept { return time_; }

private:
  double time_;
};

/// The data matrix carries no information about the dictionary (all singular values vanish).
class DegenerateDataError : public NumericalError
{
public:
  using NumericalError::NumericalError;
};

/// The actuation regressor is rank deficient; the input is not exciting enough.
class UnidentifiableError : public NumericalError
{
public:
  UnidentifiableError(long rank, long required)
      : NumericalError("actuation regressor has numerical rank " + std::to_string(rank) + " < " +
                       std::to_string(required) + " unknowns; input is not sufficiently exciting"),
        rank_(rank), required_(required)
  {}

  [[nodiscard]] long rank() const noexcept { return rank_; }
  [[nodiscard]] long required() const noexcept { return required_; }

private:
  long rank_;
  long required_;
};

}  // namespace kronic

#endif  // KRONIC_ERROR_HPP
