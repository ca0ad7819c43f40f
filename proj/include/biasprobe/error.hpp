#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace biasprobe {

enum class ErrorCode {
  // corpus
  MalformedJson,
  DuplicateTemplateId,
  MissingLanguageVariant,
  PlaceholderMismatch,
  UnknownPlaceholderRole,
  EmptyTermList,
  UnknownAttribute,
  MissingLexiconEntry,
  UnpairedSample,
  NeutralLabelPresent,
  EmptyLabelClass,
  IllegalCharacter,
  // scoring
  MalformedLine,
  DuplicateSampleId,
  ProbabilityOutOfRange,
  Unreachable,
  SchemaViolation,
  PartialFailure,
  EmptyText,
  Unparseable,
  // metrics
  MissingScore,
  EmptyCell,
  SingleGroup,
  UnknownMajorityGroup,
  UnknownLanguage,
  MismatchedMetadata,
  // stats
  LengthMismatch,
  TooFewTreatments,
  TooFewBlocks,
  AsymmetricMatrix,
  // experiments / cli
  EmptyAfterFilter,
  UnalignedTestSets,
  MismatchedCells,
  IoFailure,
  MalformedConfig,
  MissingPath,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::DuplicateTemplateId: return "DuplicateTemplateId";
    case ErrorCode::MissingLanguageVariant: return "MissingLanguageVariant";
    case ErrorCode::PlaceholderMismatch: return "PlaceholderMismatch";
    case ErrorCode::UnknownPlaceholderRole: return "UnknownPlaceholderRole";
    case ErrorCode::EmptyTermList: return "EmptyTermList";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::MissingLexiconEntry: return "MissingLexiconEntry";
    case ErrorCode::UnpairedSample: return "UnpairedSample";
    case ErrorCode::NeutralLabelPresent: return "NeutralLabelPresent";
    case ErrorCode::EmptyLabelClass: return "EmptyLabelClass";
    case ErrorCode::IllegalCharacter: return "IllegalCharacter";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::DuplicateSampleId: return "DuplicateSampleId";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::PartialFailure: return "PartialFailure";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::Unparseable: return "Unparseable";
    case ErrorCode::MissingScore: return "MissingScore";
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::SingleGroup: return "SingleGroup";
    case ErrorCode::UnknownMajorityGroup: return "UnknownMajorityGroup";
    case ErrorCode::UnknownLanguage: return "UnknownLanguage";
    case ErrorCode::MismatchedMetadata: return "MismatchedMetadata";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewTreatments: return "TooFewTreatments";
    case ErrorCode::TooFewBlocks: return "TooFewBlocks";
    case ErrorCode::AsymmetricMatrix: return "AsymmetricMatrix";
    case ErrorCode::EmptyAfterFilter: return "EmptyAfterFilter";
    case ErrorCode::UnalignedTestSets: return "UnalignedTestSets";
    case ErrorCode::MismatchedCells: return "MismatchedCells";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MalformedConfig: return "MalformedConfig";
    case ErrorCode::MissingPath: return "MissingPath";
  }
  return "Unknown";
}

/// Every failure raised by the library. `ids` carries the offending sample
/// ids for errors that name a set of them (MissingScore, PartialFailure).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::vector<std::string> ids = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        ids_(std::move(ids)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  ErrorCode code_;
  std::vector<std::string> ids_;
};

}  // namespace biasprobe
