#pragma once

#include <stdexcept>
#include <string>

namespace smrc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SMRC_DEFINE_ERROR(Name, Base)  \
  class Name : public Base {           \
   public:                             \
    using Base::Base;                  \
  }

// Domain / decomposition
SMRC_DEFINE_ERROR(DomainError, Error);
SMRC_DEFINE_ERROR(EmptyInput, DomainError);
SMRC_DEFINE_ERROR(UnparsableFormat, DomainError);

// Capability failures
SMRC_DEFINE_ERROR(GeneratorFailure, Error);
SMRC_DEFINE_ERROR(ScorerFailure, Error);
SMRC_DEFINE_ERROR(JudgeFailure, Error);
SMRC_DEFINE_ERROR(UnparsableVerdict, JudgeFailure);
SMRC_DEFINE_ERROR(UnreachableState, GeneratorFailure);

// Reward tree
SMRC_DEFINE_ERROR(NodeBudgetExceeded, Error);
SMRC_DEFINE_ERROR(InvariantViolation, Error);
SMRC_DEFINE_ERROR(NotPropagated, Error);

// Search
SMRC_DEFINE_ERROR(InitializationFailure, Error);
SMRC_DEFINE_ERROR(ConfigError, Error);

// Datasets and evaluation
SMRC_DEFINE_ERROR(ParseError, Error);
SMRC_DEFINE_ERROR(SchemaError, Error);
SMRC_DEFINE_ERROR(EmptyDataset, Error);
SMRC_DEFINE_ERROR(IndexOutOfRange, Error);
SMRC_DEFINE_ERROR(JoinError, Error);
SMRC_DEFINE_ERROR(IoError, Error);

// Remote endpoint
SMRC_DEFINE_ERROR(LlmError, Error);
SMRC_DEFINE_ERROR(Timeout, LlmError);
SMRC_DEFINE_ERROR(HttpError, LlmError);
SMRC_DEFINE_ERROR(EmptyCompletion, LlmError);

#undef SMRC_DEFINE_ERROR

}  // namespace smrc
