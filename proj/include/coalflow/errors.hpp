#pragma once

#include <stdexcept>
#include <string>

namespace coalflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Motion models.
class NonPositiveDiffusion : public Error {
 public:
  using Error::Error;
};
class NegativeDuration : public Error {
 public:
  using Error::Error;
};
class InvalidGap : public Error {
 public:
  using Error::Error;
};
class CovarianceNotFactorizable : public Error {
 public:
  using Error::Error;
};
class EmptyStarts : public Error {
 public:
  using Error::Error;
};

// Skeleton / flow evaluation.
class OffGridTime : public Error {
 public:
  using Error::Error;
};
class AboveRange : public Error {
 public:
  using Error::Error;
};
class OutOfHorizon : public Error {
 public:
  using Error::Error;
};

class InvalidTimePair : public Error {
 public:
  using Error::Error;
};

class NoAnalyticLaw : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SnapshotError : public Error {
 public:
  using Error::Error;
};

}  // namespace coalflow
