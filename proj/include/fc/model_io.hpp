#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "fc/factor_model.hpp"
#include "fc/inference.hpp"
#include "fc/matrix.hpp"

namespace fc {

// A model file: every parameter has a value; entries marked free also
// become fit parameters (entries sharing a free:name are tied).
struct ParsedModel {
  FactorModel model;
  std::vector<FreeParameter> free;

  bool has_free() const { return !free.empty(); }
  FitTemplate fit_template() const { return FitTemplate(model, free); }
};

ParsedModel parse_model_spec(std::string_view text);
ParsedModel load_model_spec(const std::string& path);
std::string print_model_spec(const FactorModel& model, const std::vector<FreeParameter>& free = {});

// Shortest decimal that reads back to the same double.
std::string format_double(double x);
double parse_double(std::string_view s);

struct CsvTable {
  std::vector<std::string> header;  // empty when the input had none
  Matrix values;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const Matrix& values, const std::vector<std::string>& header);
void write_csv_file(const std::string& path, const Matrix& values, const std::vector<std::string>& header);

std::string read_text_file(const std::string& path);

}  // namespace fc
