#pragma once

#include <stdexcept>
#include <string>

namespace actowl {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed caller input: non-finite coordinates, negative counts, bad sizes.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Scale matrix lost positive definiteness, or a normalizer underflowed.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An answer names someone outside the scenario's user list.
class VocabularyError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Raised by select_next when nothing is left to ask about.
class NoCandidatesError : public Error {
 public:
  NoCandidatesError() : Error("candidate set is empty") {}
};

}  // namespace actowl
