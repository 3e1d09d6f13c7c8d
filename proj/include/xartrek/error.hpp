#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xartrek {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// FPGA execution requested for a profile that declares no hardware kernel.
class NoKernelError : public Error {
public:
    using Error::Error;
};

class OversizedKernelError : public Error {
public:
    explicit OversizedKernelError(const std::string& kernel_id)
        : Error("kernel '" + kernel_id + "' is larger than the FPGA area capacity"),
          kernel_id_(kernel_id) {}
    [[nodiscard]] const std::string& kernel_id() const noexcept { return kernel_id_; }

private:
    std::string kernel_id_;
};

class OverCapacityError : public Error {
public:
    explicit OverCapacityError(const std::string& image_id)
        : Error("configuration image '" + image_id + "' exceeds the FPGA area capacity"),
          image_id_(image_id) {}
    [[nodiscard]] const std::string& image_id() const noexcept { return image_id_; }

private:
    std::string image_id_;
};

class AssignmentError : public Error {
public:
    using Error::Error;
};

class UnknownKernelError : public Error {
public:
    using Error::Error;
};

class UnknownImageError : public Error {
public:
    using Error::Error;
};

class ContractViolation : public Error {
public:
    using Error::Error;
};

class MismatchedAppError : public Error {
public:
    using Error::Error;
};

/// Text or CSV input that does not match its schema. Carries the 1-based line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class SimTimeoutError : public Error {
public:
    using Error::Error;
};

class UnknownAppError : public Error {
public:
    using Error::Error;
};

} // namespace xartrek
