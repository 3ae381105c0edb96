// Text syntax for mission formulas.
//
//   formula  := implies
//   implies  := or ( "->" implies )?            right associative
//   or       := and ( "||" and )*
//   and      := until ( "&&" until )*
//   until    := unary ( "U" until )?            right associative
//   unary    := ("!" | "X" | "<>" | "[]") unary | atom | "(" formula ")"
//   atom     := "true" | "false" | [a-z_][a-z0-9_]*

#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include "swarmplan/ltl/formula.hpp"

namespace swarm::ltl {

class ParseError : public std::runtime_error {
public:
    ParseError(std::string message, std::size_t position)
        : std::runtime_error(message + " at offset " + std::to_string(position)),
          message_(std::move(message)),
          position_(position) {}

    const std::string& message() const { return message_; }
    std::size_t position() const { return position_; }

private:
    std::string message_;
    std::size_t position_;
};

class UndeclaredPropositionError : public std::runtime_error {
public:
    explicit UndeclaredPropositionError(std::string name)
        : std::runtime_error("undeclared proposition '" + name + "'"), name_(std::move(name)) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

/// Parses `text`. When `declared` is given every proposition must be a member.
Formula parse_ltl(const std::string& text,
                  const std::optional<std::set<std::string>>& declared = std::nullopt);

}  // namespace swarm::ltl
