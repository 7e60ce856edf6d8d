#pragma once

#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "dygie/corpus/types.hpp"

namespace dygie {

// Decoded model output for one document.
struct PredictedDoc {
  std::string doc_id;
  std::vector<std::pair<corpus::Span, std::string>> entities;
  std::vector<std::tuple<corpus::Span, corpus::Span, std::string>> relations;
  // One entry per coreference-beam span; nullopt = epsilon (no antecedent).
  std::vector<std::pair<corpus::Span, std::optional<corpus::Span>>> antecedents;
};

}  // namespace dygie
