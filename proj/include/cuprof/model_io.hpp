#pragma once

// JSON persistence for trained models: a kind tag, parameters, and flat
// numeric arrays (trees as preorder node lists).

#include <string>

#include "cuprof/classifiers.hpp"

namespace cuprof {

inline constexpr const char* kModelSchema = "cuprof.model/1";

std::string model_to_json(const Model& model);
/// Throws FormatError on malformed or unknown documents.
Model model_from_json(const std::string& text);

}  // namespace cuprof
