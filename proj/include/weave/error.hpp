#pragma once

#include <stdexcept>
#include <string>

namespace weave {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SourcePos {
    int line = 0;
    int col = 0;
};

// Rendered as `file:line:col: message`.
class ParseError : public Error {
public:
    ParseError(std::string file, SourcePos pos, const std::string &message);

    const std::string &file() const { return file_; }
    SourcePos pos() const { return pos_; }
    const std::string &message() const { return message_; }

private:
    std::string file_;
    SourcePos pos_;
    std::string message_;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class StoreError : public Error {
public:
    using Error::Error;
};

class CompileError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

} // namespace weave
