/*
 *   Copyright 2026 MCBM Authors
 *
 *   Licensed under the Apache License, Version 2.0 (the "License");
 *   you may not use this file except in compliance with the License.
 *   You may obtain a copy of the License at
 *
 *       http://www.apache.org/licenses/LICENSE-2.0
 *
 *   Unless required by applicable law or agreed to in writing, software
 *   distributed under the License is distributed on an "AS IS" BASIS,
 *   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *   See the License for the specific language governing permissions and
 *   limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mcbm::io {

std::string read_file(const std::string& path);

/// Writes via a temporary sibling file and rename, so readers never observe
/// a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

std::vector<std::string> split(const std::string& line, char delim);

/// Splits into lines, tolerating trailing '\r' and a missing final newline.
std::vector<std::string> split_lines(const std::string& text);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

/// Fixed-point with `digits` decimals (table-style output).
std::string format_fixed(double value, int digits);

double parse_double(const std::string& text, const std::string& context);
long long parse_int(const std::string& text, const std::string& context);

/// FNV-1a 64-bit digest, lowercase hex.
std::string fnv1a64_hex(const std::string& bytes);

}  // namespace mcbm::io
