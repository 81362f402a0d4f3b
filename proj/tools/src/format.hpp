#pragma once

#include <ostream>
#include <span>
#include <string>

namespace agestruct::app {

/// Shortest decimal that reads back to the same double.
std::string format_double(double value);

/// Writes one CSV row of doubles.
void write_row(std::ostream& out, std::span<const double> values);

}  // namespace agestruct::app
