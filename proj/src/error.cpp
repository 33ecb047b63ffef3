#include "drp/error.hpp"

namespace drp {

const char* error_kind_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Io:                return "IoError";
        case ErrorKind::Parse:             return "ParseError";
        case ErrorKind::Partition:         return "PartitionError";
        case ErrorKind::UnknownUser:       return "UnknownUser";
        case ErrorKind::EmptyText:         return "EmptyText";
        case ErrorKind::EmptyHistory:      return "EmptyHistory";
        case ErrorKind::ZeroVector:        return "ZeroVector";
        case ErrorKind::TooFewPoints:      return "TooFewPoints";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::InsufficientUsers: return "InsufficientUsers";
        case ErrorKind::LengthMismatch:    return "LengthMismatch";
        case ErrorKind::EmptyInput:        return "EmptyInput";
        case ErrorKind::MissingReference:  return "MissingReference";
        case ErrorKind::SampleSetMismatch: return "SampleSetMismatch";
        case ErrorKind::DegenerateInput:   return "DegenerateInput";
        case ErrorKind::Config:            return "ConfigError";
        case ErrorKind::InvalidArgument:   return "InvalidArgument";
        case ErrorKind::Provider:          return "ProviderError";
        case ErrorKind::Timeout:           return "Timeout";
        case ErrorKind::Http:              return "HttpError";
        case ErrorKind::FixtureMiss:       return "FixtureMiss";
        case ErrorKind::Protocol:          return "ProtocolError";
        case ErrorKind::CacheIo:           return "CacheIoError";
        case ErrorKind::ExtractionParse:   return "ExtractionParseError";
        case ErrorKind::ValidationParse:   return "ValidationParseError";
        case ErrorKind::JudgeParse:        return "JudgeParseError";
    }
    return "Error";
}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Provider:
        case ErrorKind::Timeout:
        case ErrorKind::Http:
        case ErrorKind::FixtureMiss:
        case ErrorKind::Protocol:
        case ErrorKind::CacheIo:
        case ErrorKind::ExtractionParse:
        case ErrorKind::ValidationParse:
        case ErrorKind::JudgeParse:
            return 3;
        default:
            return 2;
    }
}

}  // namespace drp
