#pragma once

#include <stdexcept>
#include <string>

namespace lingo {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// intent-graph
struct AnswerOutOfDomain : Error { using Error::Error; };

// corpus
struct ChainSyntaxError : Error { using Error::Error; };
struct ChainPathError : Error { using Error::Error; };
struct DegenerateTable : Error { using Error::Error; };
struct DegenerateAgreement : Error { using Error::Error; };

// prompt-kit
struct UnknownNode : Error { using Error::Error; };
struct UnresolvedPlaceholder : Error { using Error::Error; };
struct InconsistentDemo : Error { using Error::Error; };

// llm-gateway
struct TransportError : Error { using Error::Error; };
struct AuthError : Error { using Error::Error; };
struct BudgetExceeded : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };

// diagnostics
struct AlignmentError : Error { using Error::Error; };

// optimizers
struct TeacherParseError : Error { using Error::Error; };
struct EmptyFilteredPool : Error { using Error::Error; };

// metrics
struct LengthMismatch : Error { using Error::Error; };

// runstore
struct StorageError : Error { using Error::Error; };
struct NotFound : Error { using Error::Error; };
struct HashMismatch : Error { using Error::Error; };

// config / cli
struct ConfigError : Error { using Error::Error; };

}  // namespace lingo
