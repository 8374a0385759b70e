#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace singvolt {

/// Shortest text for v with 17 significant digits ("nan"/"inf" spelled out).
std::string format_double(double v);

/// Writes a header row then one line per row, comma separated.
void write_csv(std::ostream& os, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace singvolt
