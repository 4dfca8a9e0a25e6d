#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace msek {

// Every failure the library reports carries one of these codes.
enum class Errc {
    // decision encoding
    UnknownAction,
    MissingArgument,
    ArgumentOutOfRange,
    SpuriousArgument,
    NoDecisionFound,
    // managed system
    PoolFull,
    LastServer,
    BadDimmer,
    UnknownMetric,
    // transport
    ChannelTimeout,
    ConnectionLost,
    // monitor
    ProbeTimeout,
    ProtocolError,
    // knowledge
    OutOfOrderSnapshot,
    CorruptRecord,
    // synthesize
    BudgetTooSmall,
    EngineTimeout,
    EngineHttpError,
    ReplayExhausted,
    // execute
    EffectorRejected,
    EffectorTimeout,
    // harness
    TraceMismatch,
    IoError,
    InvalidConfig,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace msek
