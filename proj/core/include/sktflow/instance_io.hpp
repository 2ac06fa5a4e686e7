#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "sktflow/catalog.hpp"

namespace sktflow {

struct ParseDiagnostic {
  int line = 0;
  std::string message;
};

struct ParseResult {
  std::optional<InstanceSpec> spec;
  std::optional<ParseDiagnostic> error;
  bool ok() const { return spec.has_value(); }
};

/// Instance file: `#` comments; sections
///   dim <2n>
///   bracket    (lines "i j k value", 1-based, antisymmetric completion)
///   J          (2n rows of 2n decimals)
///   g          (2n rows of 2n decimals)
ParseResult parse_instance(std::istream& in);
ParseResult parse_instance_file(const std::string& path);

void write_instance(const InstanceSpec& spec, std::ostream& out);
bool write_instance_file(const InstanceSpec& spec, const std::string& path);

/// decimal, 17 significant digits, locale-independent
std::string format_double(double v);

}  // namespace sktflow
