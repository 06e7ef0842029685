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

#include "dstage/error.hpp"

namespace dstage {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedWav: return "MalformedWav";
    case ErrorCode::kUnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::kAudioTooShort: return "AudioTooShort";
    case ErrorCode::kEmptySelection: return "EmptySelection";
    case ErrorCode::kEmptyTrajectory: return "EmptyTrajectory";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptySubset: return "EmptySubset";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kNonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kDuplicateMember: return "DuplicateMember";
    case ErrorCode::kClassOrderMismatch: return "ClassOrderMismatch";
    case ErrorCode::kMissingPosterior: return "MissingPosterior";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kInsufficientClassCoverage:
      return "InsufficientClassCoverage";
    case ErrorCode::kLabelOutOfVocabulary: return "LabelOutOfVocabulary";
    case ErrorCode::kRecipeMismatch: return "RecipeMismatch";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kParse: return "Parse";
  }
  return "Unknown";
}

}  // namespace dstage
