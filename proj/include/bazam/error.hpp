#pragma once

#include <stdexcept>
#include <string>

namespace bazam {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or truncated encodings, invalid group elements.
class DecodeError : public Error {
public:
    using Error::Error;
};

// Bad arguments to setup or configuration structs.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Ledger rule violations (empty block, reputation delta rule).
class LedgerError : public Error {
public:
    using Error::Error;
};

// Actor state-machine violations: calls made out of order or on unregistered actors.
class ProtocolError : public Error {
public:
    using Error::Error;
};

}  // namespace bazam
