#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "echoguard/errors.hpp"
#include "echoguard/metrics/transcript.hpp"
#include "echoguard/metrics/wer.hpp"

namespace echoguard {

struct EvalRecord {
  std::string sample_id;
  std::vector<std::string> clean_transcript;
  std::vector<std::string> jammed_transcript;
  double cosine = 1.0;
  std::optional<double> pleasantness;  // 1..5
  std::optional<double> clarity;       // 1..5
  std::optional<double> utility;
  std::string error;  // non-empty marks a failed sample, excluded from aggregates

  bool failed() const { return !error.empty(); }
};

// Utility = Pleasantness_norm * Clarity_norm * Degradation_norm with
// (x-1)/4 rating normalization and (1-cosine)/2 degradation normalization.
inline double utility_index(double pleasantness, double clarity, double cosine) {
  if (!(pleasantness >= 1.0 && pleasantness <= 5.0))
    throw Error(ErrorKind::invalid_argument, "pleasantness must lie in [1, 5]");
  if (!(clarity >= 1.0 && clarity <= 5.0))
    throw Error(ErrorKind::invalid_argument, "clarity must lie in [1, 5]");
  if (!(cosine >= -1.0 && cosine <= 1.0))
    throw Error(ErrorKind::invalid_argument, "cosine must lie in [-1, 1]");
  return (pleasantness - 1.0) / 4.0 * ((clarity - 1.0) / 4.0) * ((1.0 - cosine) / 2.0);
}

inline EvalRecord make_record(std::string sample_id, std::vector<std::string> clean_tokens,
                              std::vector<std::string> jammed_tokens,
                              std::optional<double> pleasantness = std::nullopt,
                              std::optional<double> clarity = std::nullopt) {
  EvalRecord rec;
  rec.sample_id = std::move(sample_id);
  rec.clean_transcript = std::move(clean_tokens);
  rec.jammed_transcript = std::move(jammed_tokens);
  rec.cosine = transcript_cosine(rec.clean_transcript, rec.jammed_transcript);
  rec.pleasantness = pleasantness;
  rec.clarity = clarity;
  if (pleasantness && clarity) rec.utility = utility_index(*pleasantness, *clarity, rec.cosine);
  return rec;
}

// Fraction of usable records whose transcript similarity fell below the
// threshold (default: the 0.5 jamming criterion).
inline double jamming_success_rate(const std::vector<EvalRecord>& records,
                                   double threshold = 0.5) {
  std::size_t ok = 0;
  std::size_t hits = 0;
  for (const auto& r : records) {
    if (r.failed()) continue;
    ++ok;
    if (r.cosine < threshold) ++hits;
  }
  if (ok == 0)
    throw Error(ErrorKind::invalid_argument, "success rate needs at least one usable record");
  return static_cast<double>(hits) / static_cast<double>(ok);
}

struct Report {
  std::size_t n_samples = 0;
  std::size_t n_failed = 0;
  double mean_wer = 0.0;
  double mean_cosine = 0.0;
  double success_rate = 0.0;
  std::optional<double> mean_utility;
};

inline Report aggregate_report(const std::vector<EvalRecord>& records) {
  if (records.empty())
    throw Error(ErrorKind::invalid_argument, "cannot aggregate an empty record list");
  Report rep;
  rep.n_samples = records.size();
  double wer_sum = 0.0;
  std::size_t wer_n = 0;
  double cos_sum = 0.0;
  std::size_t cos_n = 0;
  double util_sum = 0.0;
  std::size_t util_n = 0;
  for (const auto& r : records) {
    if (r.failed()) {
      ++rep.n_failed;
      continue;
    }
    cos_sum += r.cosine;
    ++cos_n;
    if (!r.clean_transcript.empty()) {
      wer_sum += wer(r.clean_transcript, r.jammed_transcript).wer;
      ++wer_n;
    }
    if (r.utility) {
      util_sum += *r.utility;
      ++util_n;
    }
  }
  if (cos_n == 0) throw Error(ErrorKind::oracle_failure, "every sample in the report failed");
  rep.mean_cosine = cos_sum / static_cast<double>(cos_n);
  rep.mean_wer = wer_n > 0 ? wer_sum / static_cast<double>(wer_n) : 0.0;
  rep.success_rate = jamming_success_rate(records);
  if (util_n > 0) rep.mean_utility = util_sum / static_cast<double>(util_n);
  return rep;
}

namespace detail {

inline std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += "\"\"";
    else quoted += c;
  }
  quoted += '"';
  return quoted;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace detail

// One row per sample; empty cells for absent ratings or failed metrics.
inline std::string report_to_csv(const std::vector<EvalRecord>& records) {
  std::string out =
      "sample_id,clean_transcript,jammed_transcript,cosine,wer,pleasantness,clarity,utility,"
      "error\n";
  for (const auto& r : records) {
    out += detail::csv_field(r.sample_id);
    out += ',';
    out += detail::csv_field(join_tokens(r.clean_transcript));
    out += ',';
    out += detail::csv_field(join_tokens(r.jammed_transcript));
    out += ',';
    if (!r.failed()) out += detail::format_double(r.cosine);
    out += ',';
    if (!r.failed() && !r.clean_transcript.empty())
      out += detail::format_double(wer(r.clean_transcript, r.jammed_transcript).wer);
    out += ',';
    if (r.pleasantness) out += detail::format_double(*r.pleasantness);
    out += ',';
    if (r.clarity) out += detail::format_double(*r.clarity);
    out += ',';
    if (r.utility) out += detail::format_double(*r.utility);
    out += ',';
    out += detail::csv_field(r.error);
    out += '\n';
  }
  return out;
}

inline nlohmann::json report_to_json(const std::vector<EvalRecord>& records) {
  const Report rep = aggregate_report(records);
  nlohmann::json summary{{"n_samples", rep.n_samples},
                         {"n_failed", rep.n_failed},
                         {"mean_wer", rep.mean_wer},
                         {"mean_cosine", rep.mean_cosine},
                         {"success_rate", rep.success_rate}};
  if (rep.mean_utility) summary["mean_utility"] = *rep.mean_utility;

  nlohmann::json samples = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json row{{"sample_id", r.sample_id},
                       {"clean_transcript", join_tokens(r.clean_transcript)},
                       {"jammed_transcript", join_tokens(r.jammed_transcript)}};
    if (!r.failed()) {
      row["cosine"] = r.cosine;
      if (!r.clean_transcript.empty())
        row["wer"] = wer(r.clean_transcript, r.jammed_transcript).wer;
    } else {
      row["error"] = r.error;
    }
    if (r.pleasantness) row["pleasantness"] = *r.pleasantness;
    if (r.clarity) row["clarity"] = *r.clarity;
    if (r.utility) row["utility"] = *r.utility;
    samples.push_back(row);
  }
  return nlohmann::json{{"summary", summary}, {"samples", samples}};
}

}  // namespace echoguard
