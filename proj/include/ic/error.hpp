#pragma once

#include <stdexcept>
#include <string>

namespace ic {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed corpus file or record.
class LoadError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Attention column not mapped to any statement.
class AlignmentError : public Error {
public:
    AlignmentError(std::size_t token_index, const std::string& what)
        : Error(what), token_index_(token_index) {}
    std::size_t token_index() const noexcept { return token_index_; }

private:
    std::size_t token_index_;
};

// Non-success status or unusable response from a remote service.
class ServiceError : public Error {
public:
    ServiceError(int status, const std::string& what) : Error(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

// Transport failure that survived every retry: the service is treated as down.
class ServiceUnavailable : public ServiceError {
public:
    explicit ServiceUnavailable(const std::string& what) : ServiceError(0, what) {}
};

// Response violates the wire contract (shape, sign, alignment, dimension).
class ProtocolError : public ServiceError {
public:
    explicit ProtocolError(const std::string& what) : ServiceError(0, what) {}
};

// Completion text without a usable "Step 2" answer.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

}  // namespace ic
