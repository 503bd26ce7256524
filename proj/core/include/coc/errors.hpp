#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace coc {

// Root of every error the library throws. Callers that only care about
// "something in coc failed" catch this; everything else catches the
// specific subclass.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// corpus
class EmptyDocument : public Error {
public:
    using Error::Error;
};

class InsufficientDistractors : public Error {
public:
    using Error::Error;
};

class TargetTooSmall : public Error {
public:
    using Error::Error;
};

// An error tied to a 1-based line in some line-delimited input.
class LineError : public Error {
public:
    LineError(const std::string& what, std::size_t line) : Error(what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class CorpusParseError : public LineError {
public:
    using LineError::LineError;
};

// llm_gateway
class ContextOverflow : public Error {
public:
    using Error::Error;
};

class ProviderError : public Error {
public:
    // status == 0 means a transport failure (no HTTP response).
    ProviderError(const std::string& what, int status, bool retryable)
        : Error(what), status_(status), retryable_(retryable) {}
    int status() const noexcept { return status_; }
    bool retryable() const noexcept { return retryable_; }

private:
    int status_;
    bool retryable_;
};

class ScriptExhausted : public Error {
public:
    using Error::Error;
};

class ScriptParseError : public LineError {
public:
    using LineError::LineError;
};

// scoring
class JudgeParseError : public Error {
public:
    JudgeParseError(const std::string& what, std::string raw_reply)
        : Error(what), raw_reply_(std::move(raw_reply)) {}
    const std::string& raw_reply() const noexcept { return raw_reply_; }

private:
    std::string raw_reply_;
};

// coc_engine
class EmptyClarification : public Error {
public:
    using Error::Error;
};

class EmptyPointback : public Error {
public:
    using Error::Error;
};

// path_search
class SearchAborted : public Error {
public:
    // partial_tree is the serialized tree built before the abort.
    SearchAborted(const std::string& what, std::string partial_tree)
        : Error(what), partial_tree_(std::move(partial_tree)) {}
    const std::string& partial_tree() const noexcept { return partial_tree_; }

private:
    std::string partial_tree_;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ResumeError : public LineError {
public:
    using LineError::LineError;
};

// dataset_forge
class ExportError : public Error {
public:
    ExportError(const std::string& what, std::string item_id)
        : Error(what), item_id_(std::move(item_id)) {}
    const std::string& item_id() const noexcept { return item_id_; }

private:
    std::string item_id_;
};

// cli
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace coc
