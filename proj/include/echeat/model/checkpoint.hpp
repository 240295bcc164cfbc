#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "echeat/model/train.hpp"

namespace echeat {

// Container layout:
//   "PTBM" | version byte | u32 LE header length | JSON header | f64 LE payload
// The header carries the model config, the tensor table (name, shape, byte
// offset into the payload) and, optionally, the training state.

inline constexpr char kCheckpointMagic[4] = {'P', 'T', 'B', 'M'};
inline constexpr std::uint8_t kCheckpointVersion = 0x01;

struct Checkpoint {
  nlohmann::json config;
  std::unique_ptr<Model> model;
  std::optional<TrainConfig> train_config;
  std::optional<TrainState> state;  // present when the run can be resumed

  Trainer resume() {
    if (!state || !train_config) throw ValidationError("checkpoint has no training state to resume");
    return Trainer(std::move(model), *train_config, *state);
  }
};

namespace detail {

inline void put_f64(std::string& out, double v) {
  auto u = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

inline double get_f64(const unsigned char* p) {
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(u);
}

inline nlohmann::json state_to_json(const TrainState& s) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& e : s.history) hist.push_back(to_json(e));
  nlohmann::json j{{"epoch", s.epoch}, {"adam_step", s.adam_step}, {"rng_state", s.rng_state},
                   {"history", hist},  {"best_epoch", s.best_epoch}};
  j["best_val_accuracy"] = s.best_val_accuracy ? nlohmann::json(*s.best_val_accuracy) : nlohmann::json(nullptr);
  return j;
}

inline TrainState state_from_json(const nlohmann::json& j) {
  TrainState s;
  s.epoch = j.at("epoch").get<std::size_t>();
  s.adam_step = j.at("adam_step").get<std::uint64_t>();
  s.rng_state = j.at("rng_state").get<std::uint64_t>();
  for (const auto& e : j.at("history")) s.history.push_back(epoch_from_json(e));
  s.best_epoch = j.at("best_epoch").get<std::size_t>();
  if (!j.at("best_val_accuracy").is_null()) s.best_val_accuracy = j.at("best_val_accuracy").get<double>();
  return s;
}

}  // namespace detail

/// Writes atomically: temp file in the same directory, then rename.
inline void save_checkpoint(const std::string& path, const Model& model, const TrainConfig* cfg = nullptr,
                            const TrainState* state = nullptr) {
  nlohmann::json table = nlohmann::json::array();
  std::string payload;
  auto add = [&](const std::string& name, const Tensor& t) {
    table.push_back({{"name", name}, {"shape", t.shape()}, {"offset", payload.size()}});
    for (double v : t.data()) detail::put_f64(payload, v);
  };
  const auto params = model.parameters();
  for (const Parameter* p : params) add(p->name, p->value);
  if (state) {
    for (const Parameter* p : params) {
      add(p->name + "/adam_m", p->m);
      add(p->name + "/adam_v", p->v);
    }
    for (std::size_t i = 0; i < state->best_values.size(); ++i) add("best/" + params.at(i)->name, state->best_values[i]);
  }
  nlohmann::json header{{"config", model.config_json()}, {"tensors", table}};
  if (cfg) header["train_config"] = cfg->to_json();
  if (state) header["train_state"] = detail::state_to_json(*state);
  const std::string hs = header.dump();
  if (hs.size() > 0xFFFFFFFFu) throw Error("checkpoint header too large");
  const auto hlen = static_cast<std::uint32_t>(hs.size());

  std::string bytes(kCheckpointMagic, 4);
  bytes.push_back(static_cast<char>(kCheckpointVersion));
  for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((hlen >> (8 * i)) & 0xFF));
  bytes += hs;
  bytes += payload;

  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(CheckpointError::Kind::io, "cannot write checkpoint '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw CheckpointError(CheckpointError::Kind::io, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw CheckpointError(CheckpointError::Kind::io, "cannot move checkpoint into '" + path + "': " + ec.message());
  }
}

inline void save_checkpoint(const std::string& path, const Trainer& trainer) {
  save_checkpoint(path, trainer.model(), &trainer.config(), &trainer.state());
}

inline Checkpoint load_checkpoint(const std::string& path) {
  using Kind = CheckpointError::Kind;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Kind::io, "cannot open checkpoint '" + path + "'");
  const std::string bytes{std::istreambuf_iterator<char>(in), {}};
  const auto* u = reinterpret_cast<const unsigned char*>(bytes.data());

  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw CheckpointError(Kind::bad_magic, path + ": not a checkpoint (bad magic)");
  }
  if (bytes.size() < 9) throw CheckpointError(Kind::truncated, path + ": truncated header");
  if (u[4] != kCheckpointVersion) {
    throw CheckpointError(Kind::bad_version, path + ": unsupported checkpoint version " + std::to_string(u[4]));
  }
  std::uint32_t hlen = 0;
  for (int i = 0; i < 4; ++i) hlen |= static_cast<std::uint32_t>(u[5 + i]) << (8 * i);
  if (bytes.size() < 9 + static_cast<std::size_t>(hlen)) throw CheckpointError(Kind::truncated, path + ": truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(9, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(Kind::bad_header, path + ": malformed header: " + e.what());
  }
  const std::size_t payload_at = 9 + hlen;
  const std::size_t payload_size = bytes.size() - payload_at;

  Checkpoint ck;
  std::map<std::string, Tensor> tensors;
  try {
    ck.config = header.at("config");
    ck.model = make_model(ck.config);
    for (const auto& entry : header.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<Shape>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const std::size_t n = shape_size(shape);
      if (offset % 8 != 0 || offset > payload_size || n > (payload_size - offset) / 8) {
        throw CheckpointError(Kind::truncated, path + ": payload ends before tensor '" + name + "'");
      }
      std::vector<double> data(n);
      for (std::size_t i = 0; i < n; ++i) data[i] = detail::get_f64(u + payload_at + offset + 8 * i);
      tensors.emplace(name, Tensor(shape, std::move(data)));
    }
    if (header.contains("train_config")) ck.train_config = TrainConfig::from_json(header.at("train_config"));
    if (header.contains("train_state")) ck.state = detail::state_from_json(header.at("train_state"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(Kind::bad_header, path + ": malformed header: " + e.what());
  } catch (const CheckpointError&) {
    throw;
  } catch (const Error& e) {
    throw CheckpointError(Kind::bad_header, path + ": " + e.what());
  }

  auto take = [&](const std::string& name, const Shape& expect, Tensor& dst) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw CheckpointError(Kind::shape_mismatch, path + ": missing tensor '" + name + "'");
    if (it->second.shape() != expect) {
      throw CheckpointError(Kind::shape_mismatch, path + ": tensor '" + name + "' has shape " +
                                                      shape_string(it->second.shape()) + ", model expects " +
                                                      shape_string(expect));
    }
    dst = std::move(it->second);
  };
  const auto params = ck.model->parameters();
  for (Parameter* p : params) {
    take(p->name, p->value.shape(), p->value);
    if (ck.state) {
      take(p->name + "/adam_m", p->value.shape(), p->m);
      take(p->name + "/adam_v", p->value.shape(), p->v);
    }
  }
  if (ck.state && tensors.count("best/" + params.front()->name)) {
    for (Parameter* p : params) {
      Tensor t;
      take("best/" + p->name, p->value.shape(), t);
      ck.state->best_values.push_back(std::move(t));
    }
  }
  return ck;
}

}  // namespace echeat
