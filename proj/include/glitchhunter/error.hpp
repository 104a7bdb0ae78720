#pragma once

#include <stdexcept>
#include <string>

namespace glitchhunter {

// Failure categories surfaced across the toolkit. Oracle errors are kept
// distinct per transport failure mode so callers can decide retry policy.
enum class Errc {
    MissingFile,
    IoFailure,
    MetaMismatch,
    VocabLengthMismatch,
    NonFiniteEntry,
    EmptyMatrix,
    EmptyNeighbors,
    InvalidPartition,
    DegenerateInput,
    EmptyToken,
    OutOfRangeId,
    SpecInvalid,
    OracleNetwork,
    OracleTimeout,
    OracleHttpStatus,
    OracleProtocolError,
    ConfigError,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::MissingFile: return "MissingFile";
        case Errc::IoFailure: return "IoFailure";
        case Errc::MetaMismatch: return "MetaMismatch";
        case Errc::VocabLengthMismatch: return "VocabLengthMismatch";
        case Errc::NonFiniteEntry: return "NonFiniteEntry";
        case Errc::EmptyMatrix: return "EmptyMatrix";
        case Errc::EmptyNeighbors: return "EmptyNeighbors";
        case Errc::InvalidPartition: return "InvalidPartition";
        case Errc::DegenerateInput: return "DegenerateInput";
        case Errc::EmptyToken: return "EmptyToken";
        case Errc::OutOfRangeId: return "OutOfRangeId";
        case Errc::SpecInvalid: return "SpecInvalid";
        case Errc::OracleNetwork: return "OracleNetwork";
        case Errc::OracleTimeout: return "OracleTimeout";
        case Errc::OracleHttpStatus: return "OracleHttpStatus";
        case Errc::OracleProtocolError: return "OracleProtocolError";
        case Errc::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

    // Oracle transport failures are the only retryable class.
    bool oracle_related() const noexcept {
        return code_ == Errc::OracleNetwork || code_ == Errc::OracleTimeout ||
               code_ == Errc::OracleHttpStatus || code_ == Errc::OracleProtocolError;
    }

private:
    Errc code_;
};

}  // namespace glitchhunter
