#pragma once

#include <stdexcept>
#include <string>

namespace monopole {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The dark/bright gap closes (Ω = 0) or the point lies inside the exclusion ball.
class DegeneratePoint : public Error {
 public:
  using Error::Error;
};

/// A patch connection was requested on the Dirac string of that patch.
class OnAxisSingular : public Error {
 public:
  using Error::Error;
};

/// A finite-difference stencil left the cap it was evaluated in.
class PatchBoundary : public Error {
 public:
  using Error::Error;
};

/// Inadmissible (q, l, m) combination.
class InvalidQuantum : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a formula (ρ ≤ 0, r ≤ 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedDetuning : public Error {
 public:
  using Error::Error;
};

class NoThreshold : public Error {
 public:
  using Error::Error;
};

class GridTooCoarse : public Error {
 public:
  using Error::Error;
};

class NonConverged : public Error {
 public:
  using Error::Error;
};

}  // namespace monopole
