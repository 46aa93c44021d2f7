#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fasim/automaton.hpp"

namespace fasim {

// A parsed model document.
//
//   # comment
//   name      steering_wheel
//   variables x y
//   output    cos(x)            (repeatable; defaults to every variable)
//   t_max     50
//
//   initial L1
//     x = pi/2                  (update variables may be omitted)
//
//   location L1
//     x' = 0.1                  flow; variables not mentioned get flow 0
//     y = cos(x)                update
//     invariant y >= -0.99      optional, repeatable, conjunctive
//
//   edge L1 -> L2
//     guard y <= -0.99 && x >= 0    relations are <=, >= and ==
//     reset x = x               repeatable; unmentioned variables keep their value
struct ModelFile {
  std::string name;
  HybridAutomaton ha;
  std::vector<std::string> outputs;
  double t_max = 10.0;
};

// Throws ModelError with ParseError for malformed text, or ValidationError
// for unsupported relations and for automata that fail validate().
ModelFile parse_model(std::string_view text);

const std::vector<std::string>& builtin_model_names();
std::optional<std::string_view> builtin_model_text(std::string_view name);

}  // namespace fasim
