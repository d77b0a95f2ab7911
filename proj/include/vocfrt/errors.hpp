#ifndef VOCFRT_ERRORS_HPP
#define VOCFRT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vocfrt {

/// Oscillator amplitude fell below the numerical floor; usually means
/// mis-tuned gains or a feedback signal far outside the design range.
class AmplitudeCollapse : public std::runtime_error {
  public:
    explicit AmplitudeCollapse(const std::string& what) : std::runtime_error(what) {}
};

/// A fault-mode-only operation was invoked in the wrong synchronization mode.
class ModeMismatch : public std::logic_error {
  public:
    explicit ModeMismatch(const std::string& what) : std::logic_error(what) {}
};

/// Breaker trip requested while the breaker is already open.
class AlreadyOpen : public std::logic_error {
  public:
    explicit AlreadyOpen(const std::string& what) : std::logic_error(what) {}
};

/// A state variable left the finite range during integration.
class NonFinite : public std::runtime_error {
  public:
    explicit NonFinite(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration file could not be parsed or validated.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vocfrt

#endif
