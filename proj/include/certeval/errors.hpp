#ifndef CERTEVAL_ERRORS_HPP_
#define CERTEVAL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace certeval {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Answers of different kinds (or pass-profile answers) cannot be compared.
struct IncomparableAnswersError : Error {
  using Error::Error;
};

// No answer marker found, or marker followed by unparseable content.
struct ExtractionFailedError : Error {
  using Error::Error;
};

// A bag with no parsed answers cannot yield frequency metrics.
struct EmptyBagError : Error {
  using Error::Error;
};

// A metric that requires graded responses was given ungraded ones.
struct UngradedBagError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// The replay store has no record for the requested key.
struct ReplayMissError : Error {
  using Error::Error;
};

// Remote endpoint failed after bounded retries.
struct BackendUnavailableError : Error {
  using Error::Error;
};

// Cache record failed its checksum; message carries the byte offset.
struct IntegrityError : Error {
  using Error::Error;
};

// Retryable environment failure (e.g. test runner not configured).
struct InfrastructureError : Error {
  using Error::Error;
};

}  // namespace certeval

#endif  // CERTEVAL_ERRORS_HPP_
