#pragma once

#include <map>
#include <string>

#include "condlim/shift.hpp"
#include "condlim/transfer.hpp"

namespace condlim {

// A model file: the subshift plus named cylinder functions. The potential is the
// function named "psi" (not yet normalized).
struct ModelFile {
  SubshiftSpec spec;
  std::map<std::string, RealFunction> functions;
};

// {"alphabet_size": k, "transition": [[...]], "functions": [{"name", "past_depth",
// "future_depth", "values": {"01|10": v, ...}, "default": v}]}. Keys list past then
// future symbols as digits; windows not listed take "default" (error if absent).
ModelFile parse_model(const std::string& json_text);
ModelFile load_model(const std::string& path);
std::string model_to_json(const ModelFile& m);

const RealFunction& model_function(const ModelFile& m, const std::string& name);
GibbsModel gibbs_model(const ModelFile& m, const NormalizeOptions& opts = {});

std::string read_file(const std::string& path);
// Writes via a temporary file and rename, so readers never see partial output.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace condlim
