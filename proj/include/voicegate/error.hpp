// voicegate/error.hpp

// Copyright 2026  The voicegate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace voicegate {

/// Every failure the engine can report. Callers branch on the code; the
/// message is for humans.
enum class ErrorCode {
  FileNotFound,
  UnsupportedFormat,
  MalformedContainer,
  SampleRateTooLow,
  EmptySignal,
  NoSpeechDetected,
  NegativeFrequency,
  InvalidBand,
  NonPowerOfTwoSize,
  InvalidLength,
  InvalidConfig,
  SignalTooShort,
  DimensionMismatch,
  EmptySequence,
  InsufficientData,
  NumericalUnderflow,
  TooFewUtterances,
  ConfigMismatch,
  EmptyRegistry,
  IoError,
  UnsupportedVersion,
  CorruptProfile,
  SilentSignal,
  InvalidSpec,
  EmptyTrialSet,
  UnknownCommand,
  BadArguments,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::MalformedContainer: return "MalformedContainer";
    case ErrorCode::SampleRateTooLow: return "SampleRateTooLow";
    case ErrorCode::EmptySignal: return "EmptySignal";
    case ErrorCode::NoSpeechDetected: return "NoSpeechDetected";
    case ErrorCode::NegativeFrequency: return "NegativeFrequency";
    case ErrorCode::InvalidBand: return "InvalidBand";
    case ErrorCode::NonPowerOfTwoSize: return "NonPowerOfTwoSize";
    case ErrorCode::InvalidLength: return "InvalidLength";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NumericalUnderflow: return "NumericalUnderflow";
    case ErrorCode::TooFewUtterances: return "TooFewUtterances";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::EmptyRegistry: return "EmptyRegistry";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::CorruptProfile: return "CorruptProfile";
    case ErrorCode::SilentSignal: return "SilentSignal";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::EmptyTrialSet: return "EmptyTrialSet";
    case ErrorCode::UnknownCommand: return "UnknownCommand";
    case ErrorCode::BadArguments: return "BadArguments";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace voicegate
