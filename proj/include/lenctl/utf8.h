// Copyright 2026 The lenctl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LENCTL_UTF8_H_
#define LENCTL_UTF8_H_

#include <string>
#include <string_view>
#include <vector>

namespace lenctl::utf8 {

// Splits text into Unicode scalar values. Malformed bytes decode to U+FFFD,
// one per offending byte.
std::u32string Decode(std::string_view text);

std::string Encode(char32_t cp);
std::string Encode(std::u32string_view text);

// Number of Unicode scalars in text.
std::size_t Length(std::string_view text);

// Byte length of the UTF-8 sequence starting with lead byte c (1 for
// malformed leads).
int SequenceLength(unsigned char c);

bool IsSpace(char32_t cp);

// ASCII-only lowercasing; other scalars pass through.
std::string AsciiLower(std::string_view text);

// Whitespace-separated words.
std::vector<std::string> SplitWords(std::string_view text);

}  // namespace lenctl::utf8

#endif  // LENCTL_UTF8_H_
