#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace medsum {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed JSON in a dataset; carries the byte offset of the failure.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : Error(what), byte_offset_(byte_offset) {}
    std::size_t byte_offset() const noexcept { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

/// A single dataset record is unusable (missing field, empty inputs, duplicate id).
class RecordError : public Error {
public:
    RecordError(const std::string& what, std::size_t record_index)
        : Error(what), record_index_(record_index) {}
    std::size_t record_index() const noexcept { return record_index_; }

private:
    std::size_t record_index_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

/// Embedding provider failure (transport, status, or shape).
class ProviderError : public Error {
public:
    ProviderError(const std::string& what, std::string endpoint, std::size_t batch_index)
        : Error(what), endpoint_(std::move(endpoint)), batch_index_(batch_index) {}
    const std::string& endpoint() const noexcept { return endpoint_; }
    std::size_t batch_index() const noexcept { return batch_index_; }

private:
    std::string endpoint_;
    std::size_t batch_index_;
};

/// The summarizer could not be reached or kept failing after retries.
class BackendUnavailable : public Error {
public:
    using Error::Error;
};

/// The summarizer answered but produced an empty summary.
class DegenerateOutput : public Error {
public:
    using Error::Error;
};

class StorageError : public Error {
public:
    using Error::Error;
};

}  // namespace medsum
