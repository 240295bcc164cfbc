#pragma once

#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "echeat/encoder/encoder.hpp"
#include "echeat/model/model.hpp"
#include "echeat/model/train.hpp"

namespace echeat {

inline nlohmann::json encoder_to_json(const EncoderConfig& c) {
  return {{"fast_factor", c.fast_factor}, {"slow_factor", c.slow_factor}, {"suspicious_min_correct", c.suspicious_min_correct}};
}

inline EncoderConfig encoder_from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(j, {"fast_factor", "slow_factor", "suspicious_min_correct"}, "encoder");
  EncoderConfig c;
  detail::read_key(j, "fast_factor", c.fast_factor);
  detail::read_key(j, "slow_factor", c.slow_factor);
  detail::read_key(j, "suspicious_min_correct", c.suspicious_min_correct);
  c.validate();
  return c;
}

/// Config file for the command-line tool. Four optional sections:
///   model   - as accepted by make_model(); "kind" defaults to denselstm
///   train   - TrainConfig keys
///   encoder - EncoderConfig keys
///   paths   - default file locations; flags win
struct CliConfig {
  nlohmann::json model = nlohmann::json::object();
  TrainConfig train;
  EncoderConfig encoder;
  std::map<std::string, std::string> paths;

  static inline const std::vector<std::string> kPathKeys{"data", "manifest", "bank", "out_model", "model", "report", "alerts"};

  static CliConfig from_json(const nlohmann::json& j) {
    detail::reject_unknown_keys(j, {"model", "train", "encoder", "paths"}, "top-level");
    CliConfig c;
    if (j.contains("model")) {
      c.model = j.at("model");
      make_model(c.model);  // validates keys and values
    }
    if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
    if (j.contains("encoder")) c.encoder = encoder_from_json(j.at("encoder"));
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      if (!p.is_object()) throw ValidationError("paths config must be a JSON object");
      for (const auto& [key, v] : p.items()) {
        if (std::find(kPathKeys.begin(), kPathKeys.end(), key) == kPathKeys.end()) {
          throw ValidationError("paths config: unknown key '" + key + "'");
        }
        if (!v.is_string()) throw ValidationError("paths config: '" + key + "' must be a string");
        c.paths[key] = v.get<std::string>();
      }
    }
    return c;
  }

  static CliConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open config '" + path + "'");
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw LoadError("config '" + path + "': " + e.what());
    }
  }

  std::string path_or(const std::string& key, const std::string& flag) const {
    if (!flag.empty()) return flag;
    auto it = paths.find(key);
    return it == paths.end() ? std::string() : it->second;
  }
};

}  // namespace echeat
