#pragma once

#include <stdexcept>
#include <string>

namespace leafsynth {

// Every failure raised by the library carries a stable, machine-readable
// category string. The CLI maps categories onto exit codes.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& what)
        : std::runtime_error(what), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

#define LEAFSYNTH_DEFINE_ERROR(Name, tag)                                        \
    class Name : public Error {                                                  \
    public:                                                                      \
        explicit Name(const std::string& what) : Error(tag, what) {}             \
    };

LEAFSYNTH_DEFINE_ERROR(InputError, "input_error")
LEAFSYNTH_DEFINE_ERROR(GenerationError, "generation_error")
LEAFSYNTH_DEFINE_ERROR(PlacementError, "placement_error")
LEAFSYNTH_DEFINE_ERROR(AnnotationError, "annotation_error")
LEAFSYNTH_DEFINE_ERROR(TransportError, "transport_error")
LEAFSYNTH_DEFINE_ERROR(ProtocolError, "protocol_error")
LEAFSYNTH_DEFINE_ERROR(ConfigError, "config_error")
LEAFSYNTH_DEFINE_ERROR(IoError, "io_error")

#undef LEAFSYNTH_DEFINE_ERROR

// Non-success reply from a remote service. 5xx and 429 are retryable.
class ServiceError : public Error {
public:
    ServiceError(int status, const std::string& what)
        : Error("service_error", what), status_(status) {}

    int status() const noexcept { return status_; }
    bool transient() const noexcept { return status_ >= 500 || status_ == 429; }

private:
    int status_;
};

inline void require(bool condition, const char* message) {
    if (!condition) throw InputError(message);
}

} // namespace leafsynth
