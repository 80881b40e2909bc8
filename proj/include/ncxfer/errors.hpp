#pragma once

#include <stdexcept>
#include <string>

namespace ncxfer {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// layout
class InvalidLayout : public Error { using Error::Error; };
class SourceTooSmall : public Error { using Error::Error; };
class DestTooSmall : public Error { using Error::Error; };
class SizeMismatch : public Error { using Error::Error; };

// transport
class InvalidConfig : public Error { using Error::Error; };
class TcpBindFailure : public Error { using Error::Error; };
class PeerClosed : public Error { using Error::Error; };
class ProtocolError : public Error { using Error::Error; };
class Truncated : public Error { using Error::Error; };
class BufferExhausted : public Error { using Error::Error; };
class EpochViolation : public Error { using Error::Error; };
class RangeError : public Error { using Error::Error; };

// measure
class DegenerateInput : public Error { using Error::Error; };

// report
class MissingBaseline : public Error { using Error::Error; };
class EmptyInput : public Error { using Error::Error; };
class IoFailure : public Error { using Error::Error; };

}  // namespace ncxfer
