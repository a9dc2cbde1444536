#pragma once

#include <stdexcept>
#include <string>

namespace threatsmith {

/// Base of every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MalformedIdentifier : public Error {
public:
    explicit MalformedIdentifier(const std::string& text)
        : Error("malformed identifier: '" + text + "'") {}
};

// vuln-source
class EmptyKeyword : public Error {
public:
    EmptyKeyword() : Error("keyword is empty") {}
};

class NetworkFailure : public Error {
public:
    using Error::Error;
};

class SourceRejection : public Error {
public:
    SourceRejection(int status, const std::string& what)
        : Error(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

class NotFound : public Error {
public:
    using Error::Error;
};

// threat-library
class IoFailure : public Error {
public:
    using Error::Error;
};

class MalformedSnapshot : public Error {
public:
    using Error::Error;
};

class UnsupportedVersion : public Error {
public:
    explicit UnsupportedVersion(long long version)
        : Error("unsupported snapshot format_version " + std::to_string(version)),
          version_(version) {}
    long long version() const noexcept { return version_; }

private:
    long long version_;
};

// analysis-engine
class InconsistentCounts : public Error {
public:
    using Error::Error;
};

class DivisionByZeroGuard : public Error {
public:
    DivisionByZeroGuard() : Error("percentage requested against a zero total") {}
};

// reporting
class UnsupportedFormat : public Error {
public:
    explicit UnsupportedFormat(const std::string& format)
        : Error("unsupported report format '" + format + "'") {}
};

class MalformedReport : public Error {
public:
    using Error::Error;
};

// scope handling
class UnknownKind : public Error {
public:
    explicit UnknownKind(const std::string& kind)
        : Error("unknown component kind '" + kind + "'") {}
};

class DuplicateCustomName : public Error {
public:
    explicit DuplicateCustomName(const std::string& name)
        : Error("duplicate custom component name '" + name + "'") {}
};

class MalformedScope : public Error {
public:
    using Error::Error;
};

class MissingScopeFile : public Error {
public:
    explicit MissingScopeFile(const std::string& path)
        : Error("scope file '" + path + "' does not exist (run 'scope init' first)") {}
};

class UnknownComponent : public Error {
public:
    explicit UnknownComponent(const std::string& id) : Error("no component with id '" + id + "'") {}
};

}  // namespace threatsmith
