#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace revmine {

// Base of every error raised by the engine. `kind()` is a stable short name
// that ends up in run reports.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

// Raised when an LLM reply cannot be turned into the expected structure.
// These trigger a repair-retry; transport and backend errors do not.
class OutputError : public Error {
public:
    using Error::Error;
};

#define REVMINE_SIMPLE_ERROR(Name)                                   \
    class Name : public Error {                                      \
    public:                                                          \
        explicit Name(const std::string& what) : Error(#Name, what) {} \
    }

#define REVMINE_OUTPUT_ERROR(Name)                                         \
    class Name : public OutputError {                                      \
    public:                                                                \
        explicit Name(const std::string& what) : OutputError(#Name, what) {} \
    }

// corpus
REVMINE_SIMPLE_ERROR(FileNotFound);

class MalformedRecord : public Error {
public:
    MalformedRecord(std::size_t line_no, std::string reason)
        : Error("MalformedRecord",
                "line " + std::to_string(line_no) + ": " + reason),
          line_no_(line_no),
          reason_(std::move(reason)) {}
    std::size_t line_no() const noexcept { return line_no_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_no_;
    std::string reason_;
};

// embedding / clustering
REVMINE_SIMPLE_ERROR(ProviderUnreachable);
REVMINE_SIMPLE_ERROR(DimensionMismatch);
REVMINE_SIMPLE_ERROR(ZeroNormVector);
REVMINE_SIMPLE_ERROR(NonFiniteValue);
REVMINE_SIMPLE_ERROR(TooFewPoints);
REVMINE_SIMPLE_ERROR(ZeroNormCentroid);

class ProviderError : public Error {
public:
    ProviderError(int status, std::string body)
        : Error("ProviderError",
                "provider returned status " + std::to_string(status) + ": " + body),
          status_(status),
          body_(std::move(body)) {}
    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

// gateway
REVMINE_SIMPLE_ERROR(BackendExhausted);
REVMINE_SIMPLE_ERROR(ScriptExhausted);
REVMINE_OUTPUT_ERROR(NoJsonFound);
REVMINE_SIMPLE_ERROR(UnknownBackend);

class ParseError : public OutputError {
public:
    ParseError(std::size_t position, const std::string& what)
        : OutputError("ParseError", what), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

// agents
class SchemaError : public OutputError {
public:
    SchemaError(std::string path, const std::string& what)
        : OutputError("SchemaError", path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

REVMINE_OUTPUT_ERROR(TooFewRecommendations);
REVMINE_OUTPUT_ERROR(ScoreOutOfRange);
REVMINE_OUTPUT_ERROR(MissingScore);
REVMINE_OUTPUT_ERROR(AmbiguousChoice);
REVMINE_SIMPLE_ERROR(TrackFailure);

// judge
REVMINE_SIMPLE_ERROR(OutOfRange);
REVMINE_OUTPUT_ERROR(MissingDimension);
REVMINE_OUTPUT_ERROR(DuplicateDimension);
REVMINE_SIMPLE_ERROR(EmptyRecords);

// orchestrator
REVMINE_SIMPLE_ERROR(InvalidConfig);
REVMINE_SIMPLE_ERROR(ConfigDrift);
REVMINE_SIMPLE_ERROR(IncompleteRun);
REVMINE_SIMPLE_ERROR(StageFailed);

#undef REVMINE_SIMPLE_ERROR
#undef REVMINE_OUTPUT_ERROR

}  // namespace revmine
