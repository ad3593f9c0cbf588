#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <vector>

#include "echoguard/errors.hpp"

namespace echoguard {

// Lowercase, strip punctuation, split on whitespace.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) {
        tokens.push_back(current);
        current.clear();
      }
    } else if (!std::ispunct(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) tokens.push_back(current);
  return tokens;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

struct WerBreakdown {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t reference_words = 0;
  double wer = 0.0;
};

// Minimum-edit alignment over words with unit costs. Can exceed 1.0 when
// insertions dominate; reported unclamped.
inline WerBreakdown wer(const std::vector<std::string>& reference,
                        const std::vector<std::string>& hypothesis) {
  if (reference.empty())
    throw Error(ErrorKind::invalid_argument, "wer needs a non-empty reference");
  const std::size_t r = reference.size();
  const std::size_t h = hypothesis.size();

  std::vector<std::vector<std::size_t>> dp(r + 1, std::vector<std::size_t>(h + 1, 0));
  for (std::size_t i = 0; i <= r; ++i) dp[i][0] = i;
  for (std::size_t j = 0; j <= h; ++j) dp[0][j] = j;
  for (std::size_t i = 1; i <= r; ++i) {
    for (std::size_t j = 1; j <= h; ++j) {
      const std::size_t sub = dp[i - 1][j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      const std::size_t del = dp[i - 1][j] + 1;
      const std::size_t ins = dp[i][j - 1] + 1;
      dp[i][j] = std::min(sub, std::min(del, ins));
    }
  }

  WerBreakdown out;
  out.reference_words = r;
  std::size_t i = r;
  std::size_t j = h;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        dp[i][j] == dp[i - 1][j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1)) {
      if (reference[i - 1] != hypothesis[j - 1]) ++out.substitutions;
      --i;
      --j;
    } else if (i > 0 && dp[i][j] == dp[i - 1][j] + 1) {
      ++out.deletions;
      --i;
    } else {
      ++out.insertions;
      --j;
    }
  }
  out.wer = static_cast<double>(out.substitutions + out.deletions + out.insertions) /
            static_cast<double>(r);
  return out;
}

inline WerBreakdown wer_text(const std::string& reference, const std::string& hypothesis) {
  return wer(tokenize(reference), tokenize(hypothesis));
}

}  // namespace echoguard
