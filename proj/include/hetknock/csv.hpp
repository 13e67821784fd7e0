#pragma once

#include <string>

#include "hetknock/dataset.hpp"

namespace hetknock {

// Column layout: features x1..xp, optional knockoffs xk1..xkp, response y.
// Comma separated, '.' decimal point, one header line, \n line endings.
// Reading accepts the columns in any order but requires the full contiguous
// sets; numbers are parsed and written with shortest round-trip formatting.
Dataset read_dataset_csv(const std::string& path);

void write_dataset_csv(const Dataset& ds, const std::string& path);

// Writes content to path via a temp file and rename so readers never observe
// a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

std::string format_double(double v);

}  // namespace hetknock
