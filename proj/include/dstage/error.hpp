/* Copyright 2026 The dstage Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef DSTAGE_ERROR_HPP_
#define DSTAGE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <vector>

namespace dstage {

// Every failure the library reports is a dstage::Error carrying a stable
// machine-readable code next to the human message.
enum class ErrorCode {
  kMalformedWav,
  kUnsupportedEncoding,
  kAudioTooShort,
  kEmptySelection,
  kEmptyTrajectory,
  kLengthMismatch,
  kEmptySubset,
  kDegenerateLabels,
  kNonFiniteFeature,
  kDimensionMismatch,
  kDuplicateMember,
  kClassOrderMismatch,
  kMissingPosterior,
  kTooFewSamples,
  kInsufficientClassCoverage,
  kLabelOutOfVocabulary,
  kRecipeMismatch,
  kInvalidConfig,
  kIo,
  kParse,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Non-fatal diagnostics accumulated while processing one item.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string message) {
  if (sink != nullptr) sink->push_back(std::move(message));
}

}  // namespace dstage

#endif  // DSTAGE_ERROR_HPP_
