#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace echoguard {

// Bag-of-words term-frequency cosine. Both empty counts as identical (1);
// exactly one empty as maximally different (0).
inline double transcript_cosine(const std::vector<std::string>& a,
                                const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;

  std::map<std::string, double> ta;
  std::map<std::string, double> tb;
  for (const auto& w : a) ta[w] += 1.0;
  for (const auto& w : b) tb[w] += 1.0;

  double dot = 0.0;
  for (const auto& [word, count] : ta) {
    const auto it = tb.find(word);
    if (it != tb.end()) dot += count * it->second;
  }
  double na = 0.0;
  for (const auto& [word, count] : ta) na += count * count;
  double nb = 0.0;
  for (const auto& [word, count] : tb) nb += count * count;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace echoguard
