#pragma once

#include <mutex>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "echeat/dataset/dataset.hpp"
#include "echeat/ipdetector/ipdetector.hpp"
#include "echeat/model/train.hpp"

namespace echeat {

enum class SessionStatus { active, flagged, completed };

inline std::string to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::active: return "active";
    case SessionStatus::flagged: return "flagged";
    default: return "completed";
  }
}

struct SessionState {
  std::string session_id;
  std::string candidate_id;
  IpAddress ip;
  std::string set_id;
  std::uint64_t started_at = 0;  // logical clock
  std::vector<std::optional<int>> answers = std::vector<std::optional<int>>(kNumQuestions);
  SessionStatus status = SessionStatus::active;
  std::vector<SessionStatus> transitions{SessionStatus::active};

  void advance(SessionStatus next) {
    const bool ok = (status == SessionStatus::active && next != SessionStatus::active) ||
                    (status == SessionStatus::flagged && next == SessionStatus::completed);
    if (!ok) throw ValidationError("session " + session_id + ": cannot go from " + to_string(status) + " to " + to_string(next));
    status = next;
    transitions.push_back(next);
  }
};

enum class AlertTrigger { ip_repeat, behavior_suspected };

inline std::string to_string(AlertTrigger t) { return t == AlertTrigger::ip_repeat ? "ip_repeat" : "behavior_suspected"; }

struct AlertRecord {
  std::string session_id;
  IpAddress ip;
  AlertTrigger trigger = AlertTrigger::ip_repeat;
  DecisionReason reason = DecisionReason::none;  // ip alerts only
  std::optional<double> probability;             // behavioral alerts only
  std::optional<std::string> new_set_id;
  std::uint64_t timestamp = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["timestamp"] = timestamp;
    j["session_id"] = session_id;
    j["ip"] = ip.str();
    j["trigger"] = to_string(trigger);
    j["reason"] = trigger == AlertTrigger::ip_repeat ? nlohmann::ordered_json(to_string(reason)) : nlohmann::ordered_json();
    j["probability"] = probability ? nlohmann::ordered_json(*probability) : nlohmann::ordered_json();
    j["new_set_id"] = new_set_id ? nlohmann::ordered_json(*new_set_id) : nlohmann::ordered_json();
    return j;
  }
};

inline void write_alerts_jsonl(std::ostream& out, const std::vector<AlertRecord>& alerts) {
  for (const auto& a : alerts) out << a.to_json().dump() << '\n';
}

struct StartResult {
  SessionState session;
  std::optional<AlertRecord> alert;
};

struct FinishResult {
  Label label = Label::normal;
  std::vector<double> probabilities;
  std::optional<AlertRecord> alert;
};

/// Session check-in through the IP detector and behavioral classification on
/// completion. The model is only read.
class Agent {
 public:
  Agent(IpStore& store, const QuestionSetPool& pool, const Model& model, AssessmentManifest manifest,
        std::uint64_t seed, EncoderConfig cfg = {})
      : store_(store), pool_(pool), model_(model), manifest_(std::move(manifest)), cfg_(cfg), rng_(seed) {}

  StartResult start_session(const std::string& candidate_id, const IpAddress& ip) {
    std::lock_guard lk(mu_);
    const Decision d = store_.check_in(ip, pool_, rng_, candidate_id);
    StartResult r;
    r.session.session_id = "s" + std::to_string(++sessions_);
    r.session.candidate_id = candidate_id;
    r.session.ip = ip;
    r.session.set_id = d.set_id;
    r.session.started_at = ++clock_;
    if (d.flagged) {
      AlertRecord a;
      a.session_id = r.session.session_id;
      a.ip = ip;
      a.trigger = AlertTrigger::ip_repeat;
      a.reason = d.reason;
      a.new_set_id = d.set_id;
      a.timestamp = clock_;
      alerts_.push_back(a);
      r.alert = a;
    }
    return r;
  }

  void record_answer(SessionState& s, std::size_t question, int score) const {
    if (s.status != SessionStatus::active) throw ValidationError("session " + s.session_id + " is not active");
    if (question >= kNumQuestions) throw ValidationError("question index out of range");
    if (score < 0 || score > manifest_[question].max_score) throw ValidationError("score out of range");
    s.answers[question] = score;
  }

  FinishResult finish_session(SessionState& s, const RawRecord& record) {
    if (s.status != SessionStatus::active) throw ValidationError("session " + s.session_id + " is not active");
    const FeatureVector fv = encode_record(record, manifest_, cfg_);
    const Prediction p = predict(model_, fv);
    FinishResult r{p.label, p.probabilities, std::nullopt};
    if (p.label == Label::suspected) {
      std::lock_guard lk(mu_);
      store_.flag_ip(s.ip, FlagReason::behavior_suspected);
      AlertRecord a;
      a.session_id = s.session_id;
      a.ip = s.ip;
      a.trigger = AlertTrigger::behavior_suspected;
      a.probability = p.probabilities.at(class_index(Label::suspected));
      a.new_set_id = store_.reassign(s.ip, pool_, rng_);
      a.timestamp = ++clock_;
      alerts_.push_back(a);
      r.alert = a;
      s.advance(SessionStatus::flagged);
    } else {
      std::lock_guard lk(mu_);
      ++clock_;
    }
    s.advance(SessionStatus::completed);
    return r;
  }

  std::vector<AlertRecord> alerts() const {
    std::lock_guard lk(mu_);
    return alerts_;
  }

 private:
  IpStore& store_;
  const QuestionSetPool& pool_;
  const Model& model_;
  AssessmentManifest manifest_;
  EncoderConfig cfg_;
  Prng rng_;
  mutable std::mutex mu_;
  std::uint64_t clock_ = 0;
  std::uint64_t sessions_ = 0;
  std::vector<AlertRecord> alerts_;
};

struct ReplayDecision {
  std::string candidate_id;
  IpAddress ip;
  std::string session_id;
  std::string set_id;
  DecisionReason ip_reason = DecisionReason::none;
  Label label = Label::normal;
  double p_suspected = 0.0;
  std::optional<std::string> new_set_id;
};

struct ReplayResult {
  std::vector<AlertRecord> alerts;
  std::vector<ReplayDecision> decisions;
  nlohmann::json store;
};

/// Every record becomes one session: IP check-in, then classification.
inline ReplayResult replay(const Dataset& ds, const AssessmentManifest& manifest, const Model& model,
                           const QuestionSetPool& pool, std::uint64_t seed, EncoderConfig cfg = {}) {
  IpStore store;
  Agent agent(store, pool, model, manifest, seed, cfg);
  ReplayResult out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& raw = ds.samples[i].raw;
    if (!raw) throw ValidationError("replay: sample " + std::to_string(i) + " has no raw record");
    auto start = agent.start_session(raw->candidate_id, raw->ip);
    const auto fin = agent.finish_session(start.session, *raw);
    ReplayDecision d;
    d.candidate_id = raw->candidate_id;
    d.ip = raw->ip;
    d.session_id = start.session.session_id;
    d.set_id = start.session.set_id;
    d.ip_reason = start.alert ? start.alert->reason : DecisionReason::none;
    d.label = fin.label;
    d.p_suspected = fin.probabilities.at(class_index(Label::suspected));
    if (fin.alert) d.new_set_id = fin.alert->new_set_id;
    out.decisions.push_back(std::move(d));
  }
  out.alerts = agent.alerts();
  out.store = store.to_json();
  return out;
}

}  // namespace echeat
