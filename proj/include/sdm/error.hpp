#pragma once

#include <stdexcept>
#include <string>

namespace sdm {

enum class ErrorKind {
    Provider,
    DegenerateParaphrase,
    IO,
    Schema,
    Config,
    DimensionMismatch,
    LengthMismatch,
    TooFewPoints,
    EmptyLabels,
    AllPairsEmpty,
    EmptyCloud,
    ZeroPromptEntropy,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// what() without the kind prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorKind kind_;
    std::string message_;
};

}  // namespace sdm
