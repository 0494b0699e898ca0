#pragma once

#include <cstdint>
#include <string>
#include <utility>

namespace slicefs {

// Error codes shared by the library and the wire protocol (ERR payload code).
enum class Err : uint16_t {
  None = 0,
  NotFound = 1,
  Exists = 2,
  NotADirectory = 3,
  PermissionDenied = 4,
  InvalidArgument = 5,
  OutOfRange = 6,
  EntryOutOfBounds = 7,
  TypeMismatch = 8,
  Conflict = 9,
  GuardFailed = 10,
  UseAfterClose = 11,
  WrongServer = 12,
  OutOfSpace = 13,
  IoFailure = 14,
  StaleScan = 15,
  InsufficientServers = 16,
  UnknownServer = 17,
  ReplicaWriteFailed = 18,
  DivergenceAbort = 19,
  RetryExhausted = 20,
  NotEmpty = 21,
  IsADirectory = 22,
  TimedOut = 23,
  ProtocolError = 24,
  VerificationFailed = 25,
};

inline const char* err_name(Err e) {
  switch (e) {
    case Err::None: return "ok";
    case Err::NotFound: return "not found";
    case Err::Exists: return "already exists";
    case Err::NotADirectory: return "not a directory";
    case Err::PermissionDenied: return "permission denied";
    case Err::InvalidArgument: return "invalid argument";
    case Err::OutOfRange: return "out of range";
    case Err::EntryOutOfBounds: return "entry out of bounds";
    case Err::TypeMismatch: return "type mismatch";
    case Err::Conflict: return "transaction conflict";
    case Err::GuardFailed: return "guard failed";
    case Err::UseAfterClose: return "use after close";
    case Err::WrongServer: return "wrong server";
    case Err::OutOfSpace: return "out of space";
    case Err::IoFailure: return "i/o failure";
    case Err::StaleScan: return "stale scan";
    case Err::InsufficientServers: return "insufficient servers";
    case Err::UnknownServer: return "unknown server";
    case Err::ReplicaWriteFailed: return "replica write failed";
    case Err::DivergenceAbort: return "divergence abort";
    case Err::RetryExhausted: return "retry exhausted";
    case Err::NotEmpty: return "directory not empty";
    case Err::IsADirectory: return "is a directory";
    case Err::TimedOut: return "timed out";
    case Err::ProtocolError: return "protocol error";
    case Err::VerificationFailed: return "verification failed";
  }
  return "unknown";
}

struct Status {
  Err code = Err::None;
  std::string message;

  Status() = default;
  Status(Err c) : code(c) {}  // NOLINT: implicit by design
  Status(Err c, std::string msg) : code(c), message(std::move(msg)) {}

  bool ok() const { return code == Err::None; }
  explicit operator bool() const { return ok(); }

  std::string to_string() const {
    std::string s = err_name(code);
    if (!message.empty()) s += ": " + message;
    return s;
  }

  static Status OK() { return Status(); }
};

// Minimal expected-like result carrier. Holds either a value or a Status
// with code != None.
template <typename T>
class Result {
 public:
  Result(T value) : value_(std::move(value)) {}  // NOLINT
  Result(Status s) : status_(std::move(s)) {}    // NOLINT
  Result(Err e) : status_(e) {}                  // NOLINT
  Result(Err e, std::string msg) : status_(e, std::move(msg)) {}

  bool ok() const { return status_.ok(); }
  explicit operator bool() const { return ok(); }

  const Status& status() const { return status_; }
  Err error() const { return status_.code; }

  T& value() & { return value_; }
  const T& value() const& { return value_; }
  T&& value() && { return std::move(value_); }

  T& operator*() { return value_; }
  const T& operator*() const { return value_; }
  T* operator->() { return &value_; }
  const T* operator->() const { return &value_; }

 private:
  T value_{};
  Status status_;
};

}  // namespace slicefs
