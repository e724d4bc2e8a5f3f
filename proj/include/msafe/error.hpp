#pragma once
#include <stdexcept>
#include <string>

namespace msafe {

enum class ErrorKind
{
    usage,      // bad arguments or configuration
    data,       // malformed or out-of-domain input data
    numerical,  // factorization failures, non-finite values
};

class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind)
    {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class UsageError : public Error
{
public:
    explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class DataError : public Error
{
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class NumericalError : public Error
{
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

} // namespace msafe
