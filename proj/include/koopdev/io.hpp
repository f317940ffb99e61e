/*
 Copyright 2026 The koopdev Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef KOOPDEV_IO_HPP
#define KOOPDEV_IO_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace koopdev {

inline constexpr const char* kToolName = "koopdev";
inline constexpr const char* kToolVersion = "0.1.0";

/// Shortest decimal text that parses back to the same double; "inf", "-inf"
/// and "nan" for non-finite values.
std::string format_number(double value);

/// Parses text written by format_number. Throws ParseError.
double parse_number(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view text);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string digest_hex(std::string_view bytes);

}  // namespace koopdev

#endif  // KOOPDEV_IO_HPP
