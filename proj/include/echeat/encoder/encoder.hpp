#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "echeat/error.hpp"
#include "echeat/ip_address.hpp"

namespace echeat {

inline constexpr std::size_t kNumQuestions = 20;
inline constexpr std::size_t kFeatureLength = 23;
inline constexpr std::size_t kNumClasses = 2;

// ----------------------------------------------------------------- labels

/// Class order is fixed everywhere: normal = 0, suspected = 1.
enum class Label : std::uint8_t { normal = 0, suspected = 1 };

inline std::string_view to_string(Label l) { return l == Label::normal ? "normal" : "suspected"; }

inline Label parse_label(std::string_view s) {
  if (s == "normal") return Label::normal;
  if (s == "suspected") return Label::suspected;
  throw ValidationError("unknown label '" + std::string(s) + "'");
}

inline std::size_t class_index(Label l) { return static_cast<std::size_t>(l); }

// ----------------------------------------------------------------- manifest

enum class Difficulty : std::uint8_t { easy, moderate, advanced };

inline std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::easy: return "easy";
    case Difficulty::moderate: return "moderate";
    case Difficulty::advanced: return "advanced";
  }
  return "easy";
}

inline Difficulty parse_difficulty(std::string_view s) {
  if (s == "easy") return Difficulty::easy;
  if (s == "moderate") return Difficulty::moderate;
  if (s == "advanced") return Difficulty::advanced;
  throw ValidationError("unknown difficulty '" + std::string(s) + "' (expected easy|moderate|advanced)");
}

/// Typical answering time per question, in seconds.
struct SecondsRange {
  int min_s = 0;
  int max_s = 0;
  friend bool operator==(const SecondsRange&, const SecondsRange&) = default;
};

inline SecondsRange answer_time_bounds(Difficulty d) {
  switch (d) {
    case Difficulty::easy: return {10, 20};
    case Difficulty::moderate: return {30, 40};
    case Difficulty::advanced: return {60, 120};
  }
  return {10, 20};
}

struct ManifestEntry {
  Difficulty difficulty = Difficulty::easy;
  int max_score = 1;
};

/// Per-question difficulty and full-mark score for one assessment.
class AssessmentManifest {
 public:
  explicit AssessmentManifest(std::vector<ManifestEntry> entries) : entries_(std::move(entries)) {
    if (entries_.size() != kNumQuestions) {
      throw ValidationError("manifest must list exactly " + std::to_string(kNumQuestions) + " questions, got " +
                            std::to_string(entries_.size()));
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].max_score < 1) {
        throw ValidationError("manifest question " + std::to_string(i + 1) + ": max_score must be >= 1");
      }
    }
  }

  /// 20 questions of one difficulty, each worth `max_score`.
  static AssessmentManifest uniform(Difficulty d = Difficulty::easy, int max_score = 5) {
    return AssessmentManifest(std::vector<ManifestEntry>(kNumQuestions, ManifestEntry{d, max_score}));
  }

  static AssessmentManifest from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ValidationError("manifest must be a JSON array");
    std::vector<ManifestEntry> entries;
    for (const auto& item : j) {
      if (!item.is_object() || !item.contains("difficulty") || !item.contains("max_score")) {
        throw ValidationError("manifest entries need 'difficulty' and 'max_score'");
      }
      if (!item.at("max_score").is_number_integer()) throw ValidationError("manifest max_score must be an integer");
      entries.push_back({parse_difficulty(item.at("difficulty").get<std::string>()), item.at("max_score").get<int>()});
    }
    return AssessmentManifest(std::move(entries));
  }

  static AssessmentManifest load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open manifest '" + path + "'");
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw LoadError("manifest '" + path + "': " + e.what());
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : entries_) {
      j.push_back({{"difficulty", std::string(to_string(e.difficulty))}, {"max_score", e.max_score}});
    }
    return j;
  }

  const std::vector<ManifestEntry>& entries() const noexcept { return entries_; }
  const ManifestEntry& operator[](std::size_t i) const { return entries_.at(i); }

 private:
  std::vector<ManifestEntry> entries_;
};

// ----------------------------------------------------------------- records

/// One LMS assessment row.
struct RawRecord {
  std::string candidate_id;
  std::array<int, kNumQuestions> q_scores{};
  int total_score = 0;
  int minutes = 1;
  IpAddress ip;
  std::optional<std::string> set_id;

  void validate() const {
    for (std::size_t i = 0; i < kNumQuestions; ++i) {
      if (q_scores[i] < 0) throw ValidationError("q" + std::to_string(i + 1) + " score must be non-negative");
    }
    if (total_score < 0 || total_score > 100) throw ValidationError("total_score must be in [0, 100]");
    if (minutes < 1) throw ValidationError("minutes must be >= 1");
  }

  friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

// ----------------------------------------------------------------- features

enum class DurationBin : std::uint8_t { long_, normal, short_ };

inline std::string_view to_string(DurationBin b) {
  switch (b) {
    case DurationBin::long_: return "long";
    case DurationBin::normal: return "normal";
    case DurationBin::short_: return "short";
  }
  return "normal";
}

/// 23-element one-hot encoding: bits 0..19 answer correctness, bits 20..22
/// the duration bin in the order (long, normal, short).
struct FeatureVector {
  std::array<std::uint8_t, kFeatureLength> bits{};

  static constexpr std::size_t kDurationOffset = kNumQuestions;

  static FeatureVector make(std::span<const bool> correct, DurationBin bin) {
    if (correct.size() != kNumQuestions) throw ValidationError("expected 20 answer bits");
    FeatureVector fv;
    for (std::size_t i = 0; i < kNumQuestions; ++i) fv.bits[i] = correct[i] ? 1 : 0;
    fv.bits[kDurationOffset + static_cast<std::size_t>(bin)] = 1;
    return fv;
  }

  void validate() const {
    int hot = 0;
    for (std::size_t i = 0; i < kFeatureLength; ++i) {
      if (bits[i] > 1) throw ValidationError("feature bits must be 0 or 1");
      if (i >= kDurationOffset) hot += bits[i];
    }
    if (hot != 1) throw ValidationError("duration bits must be one-hot");
  }

  int correct_count() const {
    int n = 0;
    for (std::size_t i = 0; i < kNumQuestions; ++i) n += bits[i];
    return n;
  }

  DurationBin bin() const {
    for (std::size_t b = 0; b < 3; ++b)
      if (bits[kDurationOffset + b]) return static_cast<DurationBin>(b);
    throw ValidationError("feature vector has no duration bit set");
  }

  void set_bin(DurationBin b) {
    for (std::size_t i = 0; i < 3; ++i) bits[kDurationOffset + i] = 0;
    bits[kDurationOffset + static_cast<std::size_t>(b)] = 1;
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// ----------------------------------------------------------------- encoding rules

/// Thresholds for the speed and accuracy rules. Per-assessment tunable.
struct EncoderConfig {
  double fast_factor = 0.5;  // short iff seconds < fast_factor * expected minimum
  double slow_factor = 1.5;  // long iff seconds > slow_factor * expected maximum
  int suspicious_min_correct = 18;  // 90% of 20

  void validate() const {
    if (!(fast_factor > 0.0) || !(slow_factor > 0.0)) throw ValidationError("encoder factors must be positive");
    if (suspicious_min_correct < 0 || suspicious_min_correct > static_cast<int>(kNumQuestions)) {
      throw ValidationError("suspicious_min_correct must be in [0, 20]");
    }
  }
};

/// Summed per-question answering-time bounds for the whole assessment.
inline SecondsRange expected_duration_range(const AssessmentManifest& manifest) {
  SecondsRange r;
  for (const auto& e : manifest.entries()) {
    const auto b = answer_time_bounds(e.difficulty);
    r.min_s += b.min_s;
    r.max_s += b.max_s;
  }
  return r;
}

/// Equality with either threshold classifies as normal.
inline DurationBin bin_duration(int minutes, SecondsRange range, const EncoderConfig& cfg = {}) {
  if (minutes < 1) throw ValidationError("minutes must be >= 1");
  const double seconds = 60.0 * minutes;
  if (seconds < cfg.fast_factor * range.min_s) return DurationBin::short_;
  if (seconds > cfg.slow_factor * range.max_s) return DurationBin::long_;
  return DurationBin::normal;
}

/// A question counts as correct only with full marks.
inline FeatureVector encode_record(const RawRecord& rec, const AssessmentManifest& manifest,
                                   const EncoderConfig& cfg = {}) {
  rec.validate();
  std::array<bool, kNumQuestions> correct{};
  for (std::size_t i = 0; i < kNumQuestions; ++i) {
    const int max = manifest[i].max_score;
    if (rec.q_scores[i] > max) {
      throw ValidationError("q" + std::to_string(i + 1) + " score " + std::to_string(rec.q_scores[i]) +
                            " exceeds max_score " + std::to_string(max));
    }
    correct[i] = rec.q_scores[i] == max;
  }
  return FeatureVector::make(correct, bin_duration(rec.minutes, expected_duration_range(manifest), cfg));
}

/// Suspected iff enough correct answers AND an abnormal answering speed.
inline Label label_record(const FeatureVector& fv, const EncoderConfig& cfg = {}) {
  fv.validate();
  const bool accurate = fv.correct_count() >= cfg.suspicious_min_correct;
  const bool abnormal = fv.bin() != DurationBin::normal;
  return accurate && abnormal ? Label::suspected : Label::normal;
}

}  // namespace echeat
