#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oplab {

enum class Errc {
  InvalidArgument,
  DuplicateId,
  UnknownId,
  PriceOutsideBand,
  InsufficientDepth,
  NotTrading,
  WrongPhase,
  CancelForbidden,
  UnsortedStream,
  MissingReference,
  MissingQuote,
  InsufficientHistory,
  MissingContext,
  EmptySample,
  InsufficientRange,
  EmptyBins,
  InvalidConfig,
  MalformedLine,
  Io,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::UnknownId: return "UnknownId";
    case Errc::PriceOutsideBand: return "PriceOutsideBand";
    case Errc::InsufficientDepth: return "InsufficientDepth";
    case Errc::NotTrading: return "NotTrading";
    case Errc::WrongPhase: return "WrongPhase";
    case Errc::CancelForbidden: return "CancelForbidden";
    case Errc::UnsortedStream: return "UnsortedStream";
    case Errc::MissingReference: return "MissingReference";
    case Errc::MissingQuote: return "MissingQuote";
    case Errc::InsufficientHistory: return "InsufficientHistory";
    case Errc::MissingContext: return "MissingContext";
    case Errc::EmptySample: return "EmptySample";
    case Errc::InsufficientRange: return "InsufficientRange";
    case Errc::EmptyBins: return "EmptyBins";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
        code_(code) {}
  explicit Error(Errc code) : Error(code, {}) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace oplab
