#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "echeat/encoder/encoder.hpp"
#include "echeat/numerics/prng.hpp"

namespace echeat {

enum class Provenance : std::uint8_t { real, synthetic, augmented };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::real: return "real";
    case Provenance::synthetic: return "synthetic";
    case Provenance::augmented: return "augmented";
  }
  return "real";
}

struct Sample {
  FeatureVector features;
  Label label = Label::normal;
  std::optional<RawRecord> raw;  // absent for augmented samples
  bool augmented = false;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  std::string name;
  Provenance provenance = Provenance::real;
  std::vector<Sample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }

  std::size_t count(Label l) const {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [l](const Sample& s) { return s.label == l; }));
  }
};

/// Concatenation, e.g. for pooled evaluation over several test sets.
inline Dataset concat(const std::vector<const Dataset*>& parts, std::string name) {
  Dataset out{std::move(name), Provenance::real, {}};
  for (const Dataset* d : parts) {
    out.samples.insert(out.samples.end(), d->samples.begin(), d->samples.end());
    if (d->provenance != Provenance::real) out.provenance = d->provenance;
  }
  return out;
}

// ----------------------------------------------------------------- CSV

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::optional<int> parse_int(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::vector<std::string> csv_columns(bool with_set_id) {
  std::vector<std::string> cols{"candidate_id"};
  for (std::size_t i = 1; i <= kNumQuestions; ++i) cols.push_back("q" + std::to_string(i));
  cols.insert(cols.end(), {"total_score", "minutes", "ip"});
  if (with_set_id) cols.push_back("set_id");
  return cols;
}

}  // namespace detail

/// Reads a `candidate_id,q1..q20,total_score,minutes,ip[,set_id]` file,
/// validating, encoding and labelling every row. Errors cite the 1-based
/// file line and the column name.
inline Dataset load_csv(const std::string& path, const AssessmentManifest& manifest, const EncoderConfig& cfg = {}) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.empty() || line == "\r") throw LoadError(path, 1, "header", "missing header row");

  const auto header = detail::split_csv_line(line);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (index.count(header[i])) throw LoadError(path, 1, header[i], "duplicate column");
    index[header[i]] = i;
  }
  const auto required = detail::csv_columns(false);
  for (const auto& col : required) {
    if (!index.count(col)) throw LoadError(path, 1, col, "missing column");
  }
  const bool has_set = index.count("set_id") > 0;
  for (const auto& h : header) {
    if (h != "set_id" && std::find(required.begin(), required.end(), h) == required.end()) {
      throw LoadError(path, 1, h, "unknown column");
    }
  }

  Dataset ds;
  ds.name = std::filesystem::path(path).stem().string();
  ds.provenance = Provenance::real;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw LoadError(path, row, "*", "expected " + std::to_string(header.size()) + " fields, got " +
                                          std::to_string(fields.size()));
    }
    auto field = [&](const std::string& col) -> const std::string& { return fields[index.at(col)]; };
    auto integer = [&](const std::string& col) {
      const auto v = detail::parse_int(field(col));
      if (!v) throw LoadError(path, row, col, "not an integer: '" + field(col) + "'");
      return *v;
    };

    RawRecord rec;
    rec.candidate_id = field("candidate_id");
    for (std::size_t q = 0; q < kNumQuestions; ++q) rec.q_scores[q] = integer("q" + std::to_string(q + 1));
    rec.total_score = integer("total_score");
    rec.minutes = integer("minutes");
    try {
      rec.ip = IpAddress::parse(field("ip"));
    } catch (const ValidationError& e) {
      throw LoadError(path, row, "ip", e.what());
    }
    if (has_set && !field("set_id").empty()) rec.set_id = field("set_id");

    Sample s;
    try {
      s.features = encode_record(rec, manifest, cfg);
    } catch (const ValidationError& e) {
      throw LoadError(path, row, "*", e.what());
    }
    s.label = label_record(s.features, cfg);
    s.raw = std::move(rec);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

/// Inverse of load_csv. Every sample must carry its raw record.
inline void write_csv(const Dataset& ds, const std::string& path) {
  const bool with_set = std::any_of(ds.samples.begin(), ds.samples.end(),
                                    [](const Sample& s) { return s.raw && s.raw->set_id; });
  std::ostringstream os;
  const auto cols = detail::csv_columns(with_set);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& s : ds.samples) {
    if (!s.raw) throw ValidationError("write_csv: sample without a raw record (augmented data has no CSV form)");
    const RawRecord& r = *s.raw;
    os << r.candidate_id;
    for (int q : r.q_scores) os << ',' << q;
    os << ',' << r.total_score << ',' << r.minutes << ',' << r.ip.str();
    if (with_set) os << ',' << r.set_id.value_or("");
    os << '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write '" + path + "'");
  out << os.str();
}

/// One row per sample: candidate_id,f1..f23,label.
inline void write_features_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write '" + path + "'");
  out << "candidate_id";
  for (std::size_t i = 1; i <= kFeatureLength; ++i) out << ",f" << i;
  out << ",label\n";
  for (const auto& s : ds.samples) {
    out << (s.raw ? s.raw->candidate_id : std::string("augmented"));
    for (auto b : s.features.bits) out << ',' << static_cast<int>(b);
    out << ',' << to_string(s.label) << '\n';
  }
}

// ----------------------------------------------------------------- split

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct SplitResult {
  Dataset train;
  Dataset validation;
};

inline std::size_t train_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

/// Seeded partition into floor(fraction * n) training samples and the rest.
/// Stratified mode allots per-class quotas by largest remainder so each
/// class keeps its ratio within one record.
inline SplitResult split(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ValidationError("split: train_fraction must be in (0, 1)");
  }
  Prng rng(spec.seed);
  const std::size_t n = ds.size();
  const std::size_t n_train = train_count(n, spec.train_fraction);
  SplitResult out{{ds.name + "/train", ds.provenance, {}}, {ds.name + "/validation", ds.provenance, {}}};

  std::vector<std::vector<std::size_t>> groups;
  if (spec.stratified) {
    groups.resize(kNumClasses);
    for (std::size_t i = 0; i < n; ++i) groups[class_index(ds.samples[i].label)].push_back(i);
  } else {
    groups.emplace_back(n);
    std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
  }

  std::vector<std::size_t> quota(groups.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double ideal = spec.train_fraction * static_cast<double>(groups[g].size());
    quota[g] = std::min(groups[g].size(), static_cast<std::size_t>(std::floor(ideal + 1e-9)));
    assigned += quota[g];
    remainders.emplace_back(ideal - static_cast<double>(quota[g]), g);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < n_train && r < remainders.size(); ++r) {
    const std::size_t g = remainders[r].second;
    if (quota[g] < groups[g].size()) {
      ++quota[g];
      ++assigned;
    }
  }

  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    rng.shuffle(groups[g]);
    train_idx.insert(train_idx.end(), groups[g].begin(), groups[g].begin() + static_cast<std::ptrdiff_t>(quota[g]));
    val_idx.insert(val_idx.end(), groups[g].begin() + static_cast<std::ptrdiff_t>(quota[g]), groups[g].end());
  }
  rng.shuffle(train_idx);
  rng.shuffle(val_idx);
  for (std::size_t i : train_idx) out.train.samples.push_back(ds.samples[i]);
  for (std::size_t i : val_idx) out.validation.samples.push_back(ds.samples[i]);
  return out;
}

// ----------------------------------------------------------------- augmentation

/// Appends label-preserving variants of suspected samples until both classes
/// have equal counts. Each variant copies a random suspected sample, then
/// with probability 0.5 flips one answer bit that keeps the correct-count at
/// or above the threshold, and with probability 0.25 swaps short <-> long.
inline Dataset augment_minority(const Dataset& train, std::uint64_t seed, const EncoderConfig& cfg = {}) {
  std::vector<std::size_t> suspected;
  for (std::size_t i = 0; i < train.size(); ++i)
    if (train.samples[i].label == Label::suspected) suspected.push_back(i);
  if (suspected.empty()) throw ValidationError("augment_minority: no suspected samples to augment");

  Dataset out = train;
  out.name = train.name + "+aug";
  const std::size_t normals = train.count(Label::normal);
  if (suspected.size() >= normals) return out;
  out.provenance = Provenance::augmented;

  Prng rng(seed);
  for (std::size_t k = suspected.size(); k < normals; ++k) {
    Sample s = train.samples[suspected[rng.uniform(suspected.size())]];
    s.raw.reset();
    s.augmented = true;
    if (rng.bernoulli(0.5)) {
      const int correct = s.features.correct_count();
      std::vector<std::size_t> flippable;
      for (std::size_t q = 0; q < kNumQuestions; ++q) {
        if (s.features.bits[q] == 0 || correct - 1 >= cfg.suspicious_min_correct) flippable.push_back(q);
      }
      if (!flippable.empty()) {
        const std::size_t q = flippable[rng.uniform(flippable.size())];
        s.features.bits[q] ^= 1;
      }
    }
    if (rng.bernoulli(0.25)) {
      s.features.set_bin(s.features.bin() == DurationBin::short_ ? DurationBin::long_ : DurationBin::short_);
    }
    s.label = label_record(s.features, cfg);
    if (s.label != Label::suspected) throw std::logic_error("augment_minority: produced a non-suspected sample");
    out.samples.push_back(std::move(s));
  }
  return out;
}

// ----------------------------------------------------------------- synthetic data

struct SynthSpec {
  std::size_t n = 0;
  double suspected_prior = 0.5;
  std::uint64_t seed = 0;
  AssessmentManifest manifest = AssessmentManifest::uniform();
};

namespace detail {

/// All completion times in [1, limit] minutes that land in each bin.
inline std::array<std::vector<int>, 3> minutes_by_bin(const AssessmentManifest& manifest, const EncoderConfig& cfg) {
  const SecondsRange range = expected_duration_range(manifest);
  const int limit = 2 * static_cast<int>(std::ceil(cfg.slow_factor * range.max_s / 60.0)) + 2;
  std::array<std::vector<int>, 3> out;
  for (int m = 1; m <= limit; ++m) out[static_cast<std::size_t>(bin_duration(m, range, cfg))].push_back(m);
  return out;
}

}  // namespace detail

/// Labelled corpus whose classes are separable by construction: normal
/// candidates answer 8-17 questions correctly at a normal pace; suspected
/// ones answer 18-20 correctly with a short or long completion time.
inline Dataset generate_synthetic(const SynthSpec& spec, const EncoderConfig& cfg = {}) {
  if (!(spec.suspected_prior >= 0.0 && spec.suspected_prior <= 1.0)) {
    throw ValidationError("generate_synthetic: prior must be in [0, 1]");
  }
  const int suspicious_lo = std::max(18, cfg.suspicious_min_correct);
  if (suspicious_lo > static_cast<int>(kNumQuestions)) throw ValidationError("generate_synthetic: threshold above 20");
  const auto minutes = detail::minutes_by_bin(spec.manifest, cfg);
  for (const auto& m : minutes) {
    if (m.empty()) throw ValidationError("generate_synthetic: manifest leaves a duration bin unreachable");
  }
  int max_total = 0;
  for (const auto& e : spec.manifest.entries()) max_total += e.max_score;

  Prng rng(spec.seed);
  Dataset ds{"synthetic", Provenance::synthetic, {}};
  ds.samples.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const bool suspect = rng.uniform01() < spec.suspected_prior;
    const int correct = suspect ? static_cast<int>(rng.uniform_int(suspicious_lo, 20))
                                : static_cast<int>(rng.uniform_int(8, 17));
    DurationBin bin = DurationBin::normal;
    if (suspect) bin = rng.bernoulli(0.5) ? DurationBin::short_ : DurationBin::long_;

    std::array<std::size_t, kNumQuestions> order{};
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    RawRecord rec;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%06zu", i + 1);
    rec.candidate_id = id;
    int total = 0;
    for (std::size_t k = 0; k < kNumQuestions; ++k) {
      const std::size_t q = order[k];
      const int max = spec.manifest[q].max_score;
      rec.q_scores[q] = static_cast<int>(k) < correct ? max : static_cast<int>(rng.uniform_int(0, max - 1));
      total += rec.q_scores[q];
    }
    rec.total_score = static_cast<int>(std::lround(100.0 * total / max_total));
    const auto& choices = minutes[static_cast<std::size_t>(bin)];
    rec.minutes = choices[rng.uniform(choices.size())];
    rec.ip.octets = {static_cast<std::uint8_t>(rng.uniform_int(1, 223)), static_cast<std::uint8_t>(rng.uniform(256)),
                     static_cast<std::uint8_t>(rng.uniform(256)), static_cast<std::uint8_t>(rng.uniform_int(1, 254))};

    Sample s;
    s.features = encode_record(rec, spec.manifest, cfg);
    s.label = label_record(s.features, cfg);
    if (s.label != (suspect ? Label::suspected : Label::normal)) {
      throw std::logic_error("generate_synthetic: generated label disagrees with the labelling rule");
    }
    s.raw = std::move(rec);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace echeat
