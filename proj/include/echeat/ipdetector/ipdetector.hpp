#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "echeat/encoder/encoder.hpp"
#include "echeat/ip_address.hpp"
#include "echeat/numerics/pca.hpp"
#include "echeat/numerics/prng.hpp"

namespace echeat {

// ----------------------------------------------------------------- question bank

struct Question {
  std::string id;
  std::string text;
  std::vector<std::string> choices;
  std::size_t answer_index = 0;
  Difficulty difficulty = Difficulty::easy;

  friend bool operator==(const Question&, const Question&) = default;
};

class QuestionBank {
 public:
  QuestionBank() = default;
  explicit QuestionBank(std::vector<Question> qs) : questions_(std::move(qs)) {
    if (questions_.empty()) throw ValidationError("question bank is empty");
    for (const auto& q : questions_) {
      if (q.choices.empty()) throw ValidationError("question '" + q.id + "' has no choices");
      if (q.answer_index >= q.choices.size()) throw ValidationError("question '" + q.id + "': answer_index out of range");
    }
  }

  static QuestionBank from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ValidationError("question bank must be a JSON array");
    std::vector<Question> qs;
    try {
      for (const auto& item : j) {
        Question q;
        q.id = item.at("id").get<std::string>();
        q.text = item.at("text").get<std::string>();
        q.choices = item.at("choices").get<std::vector<std::string>>();
        q.answer_index = item.at("answer_index").get<std::size_t>();
        q.difficulty = parse_difficulty(item.value("difficulty", std::string("easy")));
        qs.push_back(std::move(q));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("question bank: ") + e.what());
    }
    return QuestionBank(std::move(qs));
  }

  static QuestionBank load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open question bank '" + path + "'");
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw LoadError("question bank '" + path + "': " + e.what());
    }
  }

  /// n placeholder questions with four choices each.
  static QuestionBank placeholder(std::size_t n = kNumQuestions) {
    std::vector<Question> qs;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = "Q" + std::to_string(i + 1);
      qs.push_back({id, "Question " + std::to_string(i + 1), {id + "-A", id + "-B", id + "-C", id + "-D"}, i % 4,
                    Difficulty::easy});
    }
    return QuestionBank(std::move(qs));
  }

  std::size_t size() const { return questions_.size(); }
  const Question& operator[](std::size_t i) const { return questions_.at(i); }
  const std::vector<Question>& questions() const { return questions_; }

 private:
  std::vector<Question> questions_;
};

/// One randomized presentation of the bank.
struct QuestionSet {
  std::string set_id;
  std::vector<std::size_t> question_order;             // indices into the bank
  std::vector<std::vector<std::size_t>> choice_order;  // per bank question

  friend bool operator==(const QuestionSet&, const QuestionSet&) = default;
};

/// "A".."Z", "AA", "AB", ...
inline std::string set_label(std::size_t index) {
  std::string s;
  std::size_t n = index + 1;
  while (n > 0) {
    s.insert(s.begin(), static_cast<char>('A' + (n - 1) % 26));
    n = (n - 1) / 26;
  }
  return s;
}

inline QuestionSet shuffle_set(const QuestionBank& bank, std::uint64_t seed, std::string set_id = "A") {
  Prng rng(seed);
  QuestionSet s;
  s.set_id = std::move(set_id);
  s.question_order.resize(bank.size());
  std::iota(s.question_order.begin(), s.question_order.end(), std::size_t{0});
  rng.shuffle(s.question_order);
  for (std::size_t q = 0; q < bank.size(); ++q) {
    std::vector<std::size_t> order(bank[q].choices.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    s.choice_order.push_back(std::move(order));
  }
  return s;
}

class QuestionSetPool {
 public:
  QuestionSetPool(QuestionBank bank, std::size_t n_sets, std::uint64_t seed) : bank_(std::move(bank)) {
    Prng rng(seed);
    for (std::size_t i = 0; i < n_sets; ++i) sets_.push_back(shuffle_set(bank_, rng.next_u64(), set_label(i)));
  }

  std::size_t size() const { return sets_.size(); }
  const QuestionSet& operator[](std::size_t i) const { return sets_.at(i); }
  const std::vector<QuestionSet>& sets() const { return sets_; }
  const QuestionBank& bank() const { return bank_; }

  const QuestionSet& find(const std::string& id) const {
    for (const auto& s : sets_)
      if (s.set_id == id) return s;
    throw ValidationError("unknown question set '" + id + "'");
  }

 private:
  QuestionBank bank_;
  std::vector<QuestionSet> sets_;
};

// ----------------------------------------------------------------- store

enum class FlagReason { none, repeat_ip, behavior_suspected };
enum class DecisionReason { none, repeat_ip, prior_flag };

inline std::string to_string(FlagReason r) {
  switch (r) {
    case FlagReason::repeat_ip: return "repeat_ip";
    case FlagReason::behavior_suspected: return "behavior_suspected";
    default: return "none";
  }
}

inline std::string to_string(DecisionReason r) {
  switch (r) {
    case DecisionReason::repeat_ip: return "repeat_ip";
    case DecisionReason::prior_flag: return "prior_flag";
    default: return "none";
  }
}

inline FlagReason parse_flag_reason(std::string_view s) {
  if (s == "none") return FlagReason::none;
  if (s == "repeat_ip") return FlagReason::repeat_ip;
  if (s == "behavior_suspected") return FlagReason::behavior_suspected;
  throw ValidationError("unknown flag reason '" + std::string(s) + "'");
}

struct IpEntry {
  std::uint64_t first_seen = 0;  // logical sequence number of the first check-in
  std::size_t check_in_count = 0;
  std::vector<std::string> assigned_set_ids;
  bool flagged = false;
  FlagReason flag_reason = FlagReason::none;

  friend bool operator==(const IpEntry&, const IpEntry&) = default;
};

struct Decision {
  std::string set_id;
  bool flagged = false;
  DecisionReason reason = DecisionReason::none;
};

namespace detail {

/// A set never issued before if one exists (uniformly), otherwise the least
/// recently issued set, which is never the last one when the pool has >= 2.
inline std::string pick_distinct(const std::vector<std::string>& history, const QuestionSetPool& pool, Prng& rng) {
  if (pool.size() < 2) {
    throw PoolExhaustedError("a distinct question set is required but the pool has " + std::to_string(pool.size()) +
                             " set(s)");
  }
  std::vector<std::size_t> fresh;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (std::find(history.begin(), history.end(), pool[i].set_id) == history.end()) fresh.push_back(i);
  }
  if (!fresh.empty()) return pool[fresh[rng.uniform(fresh.size())]].set_id;
  std::size_t best = 0;
  std::size_t best_last = history.size();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto it = std::find(history.rbegin(), history.rend(), pool[i].set_id);
    const std::size_t last = static_cast<std::size_t>(history.rend() - it) - 1;
    if (last < best_last) {
      best_last = last;
      best = i;
    }
  }
  return pool[best].set_id;
}

}  // namespace detail

/// Real-time IP registry. All mutations are serialized by one mutex, so
/// check_in is linearizable.
class IpStore {
 public:
  IpStore() = default;
  IpStore(const IpStore& o) {
    std::lock_guard lk(o.mu_);
    entries_ = o.entries_;
    clock_ = o.clock_;
    candidates_ = o.candidates_;
  }
  IpStore& operator=(const IpStore&) = delete;

  Decision check_in(const IpAddress& ip, const QuestionSetPool& pool, Prng& rng,
                    const std::optional<std::string>& candidate_id = std::nullopt) {
    if (pool.size() == 0) throw PoolExhaustedError("question set pool is empty");
    std::lock_guard lk(mu_);
    Decision d;
    auto it = entries_.find(ip);
    if (it == entries_.end()) {
      IpEntry e;
      e.first_seen = ++clock_;
      e.check_in_count = 1;
      const auto* churn = candidate_id ? find_candidate(*candidate_id) : nullptr;
      if (churn && churn->ip != ip) {
        // Known candidate arriving from a different address.
        d.set_id = detail::pick_distinct(churn->sets, pool, rng);
        d.flagged = true;
        d.reason = DecisionReason::repeat_ip;
        e.flagged = true;
        e.flag_reason = FlagReason::repeat_ip;
      } else {
        d.set_id = pool[rng.uniform(pool.size())].set_id;
      }
      e.assigned_set_ids.push_back(d.set_id);
      it = entries_.emplace(ip, std::move(e)).first;
    } else {
      IpEntry& e = it->second;
      d.reason = e.flagged ? DecisionReason::prior_flag : DecisionReason::repeat_ip;
      d.flagged = true;
      d.set_id = detail::pick_distinct(e.assigned_set_ids, pool, rng);
      if (!e.flagged) {
        e.flagged = true;
        e.flag_reason = FlagReason::repeat_ip;
      }
      ++clock_;
      ++e.check_in_count;
      e.assigned_set_ids.push_back(d.set_id);
    }
    if (candidate_id) {
      auto& c = candidates_[*candidate_id];
      if (c.sets.empty()) c.ip = ip;
      c.sets.push_back(d.set_id);
    }
    return d;
  }

  /// Marks a registered IP as suspicious. Idempotent; the first reason is kept.
  void flag_ip(const IpAddress& ip, FlagReason reason) {
    if (reason == FlagReason::none) throw ValidationError("flag_ip: reason must not be none");
    std::lock_guard lk(mu_);
    auto it = entries_.find(ip);
    if (it == entries_.end()) throw ValidationError("flag_ip: IP " + ip.str() + " is not registered");
    if (!it->second.flagged) {
      it->second.flagged = true;
      it->second.flag_reason = reason;
    }
  }

  /// Issues a set distinct from everything this IP has received and records it.
  std::string reassign(const IpAddress& ip, const QuestionSetPool& pool, Prng& rng) {
    std::lock_guard lk(mu_);
    auto it = entries_.find(ip);
    if (it == entries_.end()) throw ValidationError("reassign: IP " + ip.str() + " is not registered");
    std::string id = detail::pick_distinct(it->second.assigned_set_ids, pool, rng);
    it->second.assigned_set_ids.push_back(id);
    return id;
  }

  std::optional<IpEntry> lookup(const IpAddress& ip) const {
    std::lock_guard lk(mu_);
    auto it = entries_.find(ip);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::map<IpAddress, IpEntry> snapshot() const {
    std::lock_guard lk(mu_);
    return entries_;
  }

  std::size_t size() const {
    std::lock_guard lk(mu_);
    return entries_.size();
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [ip, e] : snapshot()) {
      j[ip.str()] = {{"first_seen", e.first_seen},
                     {"check_in_count", e.check_in_count},
                     {"assigned_set_ids", e.assigned_set_ids},
                     {"flagged", e.flagged},
                     {"flag_reason", e.flagged ? nlohmann::json(to_string(e.flag_reason)) : nlohmann::json(nullptr)}};
    }
    return j;
  }

  static IpStore from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("IP store snapshot must be a JSON object");
    IpStore s;
    try {
      for (const auto& [key, v] : j.items()) {
        IpEntry e;
        e.first_seen = v.at("first_seen").get<std::uint64_t>();
        e.check_in_count = v.at("check_in_count").get<std::size_t>();
        e.assigned_set_ids = v.at("assigned_set_ids").get<std::vector<std::string>>();
        e.flagged = v.at("flagged").get<bool>();
        e.flag_reason = v.at("flag_reason").is_null() ? FlagReason::none
                                                      : parse_flag_reason(v.at("flag_reason").get<std::string>());
        s.clock_ = std::max<std::uint64_t>(s.clock_, e.first_seen);
        s.entries_.emplace(IpAddress::parse(key), std::move(e));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("IP store snapshot: ") + e.what());
    }
    std::uint64_t total = 0;
    for (const auto& [_, e] : s.entries_) total += e.check_in_count;
    s.clock_ = std::max(s.clock_, total);
    return s;
  }

 private:
  struct CandidateTrace {
    IpAddress ip;
    std::vector<std::string> sets;
  };

  const CandidateTrace* find_candidate(const std::string& id) const {
    auto it = candidates_.find(id);
    return it == candidates_.end() ? nullptr : &it->second;
  }

  mutable std::mutex mu_;
  std::map<IpAddress, IpEntry> entries_;
  std::map<std::string, CandidateTrace> candidates_;
  std::uint64_t clock_ = 0;
};

// ----------------------------------------------------------------- projection

struct IpPoint {
  IpAddress ip;
  double x = 0.0;
  double y = 0.0;
  Label label = Label::normal;
};

/// Octets scaled to [0, 1], projected onto the first two principal
/// components. Duplicates are collapsed; output is sorted by address.
inline std::vector<IpPoint> project_ips(std::vector<IpAddress> ips, const std::map<IpAddress, Label>& labels = {}) {
  std::sort(ips.begin(), ips.end());
  ips.erase(std::unique(ips.begin(), ips.end()), ips.end());
  std::vector<IpPoint> out;
  for (const auto& ip : ips) {
    auto it = labels.find(ip);
    out.push_back({ip, 0.0, 0.0, it == labels.end() ? Label::normal : it->second});
  }
  if (ips.size() < 2) return out;
  Tensor x({ips.size(), 4});
  for (std::size_t i = 0; i < ips.size(); ++i)
    for (std::size_t j = 0; j < 4; ++j) x.at(i, j) = ips[i].octets[j] / 255.0;
  const PcaModel pca = pca_fit(x, 2);
  const Tensor p = pca_project(pca, x);
  for (std::size_t i = 0; i < ips.size(); ++i) {
    out[i].x = p.at(i, 0);
    out[i].y = p.at(i, 1);
  }
  return out;
}

inline std::vector<IpPoint> project_ips(const IpStore& store, const std::map<IpAddress, Label>& labels = {}) {
  std::vector<IpAddress> ips;
  for (const auto& [ip, _] : store.snapshot()) ips.push_back(ip);
  return project_ips(std::move(ips), labels);
}

}  // namespace echeat
