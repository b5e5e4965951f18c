#pragma once

#include <stdexcept>
#include <string>

namespace mrta {

// Base for every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed text input. line() is 1-based, 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(int line, const std::string& what)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// Precondition violated by the caller (bad ids, out-of-bounds poses, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

// Planner could not connect two valid cells.
class Unreachable : public Error {
public:
    using Error::Error;
};

// Scenario cross-reference or validation failure.
class ScenarioError : public Error {
public:
    using Error::Error;
};

// File could not be opened or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mrta
