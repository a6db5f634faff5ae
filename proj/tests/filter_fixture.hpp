#pragma once

// Crafted 12-pair corpus exercising every filter rule plus the keep-side
// boundaries (exactly 100 tokens, ratio exactly 9). Shared by the corpus unit
// tests and the acceptance suite.

#include <string>
#include <vector>

#include "stylemux/corpus.hpp"

namespace fixture {

struct FilterCase {
  std::vector<std::string> src, tgt;
  stylemux::corpus::FilterVerdict expected;
};

inline std::vector<std::string> repeat_token(const std::string& tok, int n) {
  return std::vector<std::string>(static_cast<size_t>(n), tok);
}

inline std::vector<FilterCase> filter_cases() {
  using stylemux::corpus::FilterVerdict;
  return {
      {{"hello", "."}, {"bonjour", "."}, FilterVerdict::kKeep},
      {{}, {"x", "y"}, FilterVerdict::kEmpty},
      {{"a", "b"}, {}, FilterVerdict::kEmpty},
      {repeat_token("word", 101), {"ok", "fine"}, FilterVerdict::kTooLong},
      {{"short", "one"}, repeat_token("mot", 101), FilterVerdict::kTooLong},
      {{"123", "456"}, {"789"}, FilterVerdict::kNoAlpha},
      {{"?", "!"}, {"words", "here"}, FilterVerdict::kNoAlpha},
      {repeat_token("a", 20), {"b", "c"}, FilterVerdict::kRatio},        // ratio 10
      {{"x", "y", "z"}, repeat_token("w", 30), FilterVerdict::kRatio},   // ratio 10
      {repeat_token("tok", 100), repeat_token("mot", 100), FilterVerdict::kKeep},
      {repeat_token("a", 18), {"b", "c"}, FilterVerdict::kKeep},         // ratio exactly 9
      {{"The", "cat", "sat"}, {"le", "chat"}, FilterVerdict::kKeep},
  };
}

// kept=4 empty=2 too_long=2 no_alpha=2 ratio=2
inline stylemux::corpus::FilterStats expected_filter_stats() {
  stylemux::corpus::FilterStats s;
  s.kept = 4;
  s.empty = 2;
  s.too_long = 2;
  s.no_alpha = 2;
  s.ratio = 2;
  return s;
}

}  // namespace fixture
