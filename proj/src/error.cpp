#include "sdm/error.hpp"

namespace sdm {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Provider: return "ProviderError";
        case ErrorKind::DegenerateParaphrase: return "DegenerateParaphrase";
        case ErrorKind::IO: return "IOError";
        case ErrorKind::Schema: return "SchemaError";
        case ErrorKind::Config: return "ConfigError";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::TooFewPoints: return "TooFewPoints";
        case ErrorKind::EmptyLabels: return "EmptyLabels";
        case ErrorKind::AllPairsEmpty: return "AllPairsEmpty";
        case ErrorKind::EmptyCloud: return "EmptyCloud";
        case ErrorKind::ZeroPromptEntropy: return "ZeroPromptEntropy";
    }
    return "Error";
}

}  // namespace sdm
