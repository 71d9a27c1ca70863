#include "csdlma/config.hpp"

#include <fstream>
#include <set>

namespace csdlma {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw ConfigError(path + ": " + why);
}

void reject_unknown(const json& obj, const std::string& path, std::set<std::string> known) {
  for (const auto& [k, v] : obj.items()) {
    if (!known.contains(k)) fail(path.empty() ? k : path + "." + k, "unknown field");
  }
}

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& path, T fallback) {
  const std::string where = path.empty() ? key : path + "." + key;
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) fail(where, "expected a boolean");
    return v.get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) fail(where, "expected a string");
    return v.get<std::string>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) fail(where, "expected a number");
    return v.get<T>();
  } else {
    if (!v.is_number_integer()) fail(where, "expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.get<std::int64_t>() < 0) fail(where, "must be non-negative");
    }
    return v.get<T>();
  }
}

template <typename T>
T require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) fail(path + "." + key, "required field missing");
  return get<T>(obj, key, path, T{});
}

template <typename Validate>
void checked(const std::string& path, Validate&& v) {
  try {
    v();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
}

NodeSpec parse_node(const json& j, std::size_t index) {
  const std::string path = "nodes[" + std::to_string(index) + "]";
  require_object(j, path);
  NodeSpec spec;
  const auto type = require<std::string>(j, "type", path);
  spec.name = get<std::string>(j, "name", path, type + std::to_string(index));
  spec.subject = get<bool>(j, "subject", path, false);

  if (type == "dlma") {
    reject_unknown(j, path, {"type", "name", "subject"});
    spec.dlma = true;
    spec.subject = true;
    return spec;
  }
  if (type == "tdma") {
    reject_unknown(j, path, {"type", "name", "subject", "frame", "slots_used", "pattern", "slot_ratio"});
    TdmaConfig c;
    c.frame_slots = require<int>(j, "frame", path);
    c.slot_ratio = get<int>(j, "slot_ratio", path, 1);
    if (j.contains("pattern")) {
      if (!j.at("pattern").is_array()) fail(path + ".pattern", "expected an array");
      for (const auto& s : j.at("pattern")) {
        if (!s.is_number_integer()) fail(path + ".pattern", "expected integers");
        c.pattern.push_back(s.get<int>());
      }
      if (j.contains("slots_used") &&
          get<int>(j, "slots_used", path, 0) != static_cast<int>(c.pattern.size())) {
        fail(path + ".slots_used", "does not match the pattern length");
      }
    } else {
      const int used = require<int>(j, "slots_used", path);
      if (used < 0 || used > c.frame_slots) fail(path + ".slots_used", "must lie in [0, frame]");
      for (int s = 0; s < used; ++s) c.pattern.push_back(s);
    }
    checked(path, [&] { c.validate(); });
    spec.legacy = c;
    return spec;
  }
  if (type == "q_aloha" || type == "fw_aloha" || type == "eb_aloha") {
    AlohaConfig c;
    c.slot_ratio = get<int>(j, "slot_ratio", path, 1);
    if (type == "q_aloha") {
      reject_unknown(j, path, {"type", "name", "subject", "q", "slot_ratio"});
      c.variant = AlohaVariant::kQ;
      c.q = require<double>(j, "q", path);
      if (!(c.q >= 0.0 && c.q <= 1.0)) fail(path + ".q", "must lie in [0, 1]");
    } else if (type == "fw_aloha") {
      reject_unknown(j, path, {"type", "name", "subject", "window", "slot_ratio"});
      c.variant = AlohaVariant::kFixedWindow;
      c.window = require<int>(j, "window", path);
    } else {
      reject_unknown(j, path, {"type", "name", "subject", "window", "max_stage", "slot_ratio"});
      c.variant = AlohaVariant::kExponentialBackoff;
      c.window = require<int>(j, "window", path);
      c.max_stage = require<int>(j, "max_stage", path);
    }
    checked(path, [&] { c.validate(); });
    spec.legacy = c;
    return spec;
  }
  if (type == "wifi") {
    reject_unknown(j, path, {"type", "name", "subject", "window", "max_stage", "packet_length"});
    WifiConfig c;
    c.window = get<int>(j, "window", path, 2);
    c.max_stage = get<int>(j, "max_stage", path, 2);
    c.packet_length = get<int>(j, "packet_length", path, 1);
    checked(path, [&] { c.validate(); });
    spec.legacy = c;
    return spec;
  }
  fail(path + ".type", "unknown node type '" + type + "'");
}

AgentConfig parse_agent(const json& j) {
  const std::string path = "agent";
  require_object(j, path);
  reject_unknown(j, path,
                 {"architecture", "hidden_layers", "width", "history", "variant", "n", "gamma",
                  "buffer", "minibatch", "target_sync", "learning_rate", "rho", "rms_epsilon",
                  "epsilon"});
  AgentConfig a;
  TrainerConfig& t = a.trainer;
  checked(path + ".architecture", [&] {
    t.network.architecture =
        nn::parse_architecture(get<std::string>(j, "architecture", path, "rnn"));
  });
  t.network.hidden_layers = get<int>(j, "hidden_layers", path, 2);
  t.network.width = get<int>(j, "width", path, 64);
  t.network.history = get<int>(j, "history", path, 40);
  checked(path + ".variant",
          [&] { t.variant = parse_variant(get<std::string>(j, "variant", path, "rb")); });
  t.n_step = get<int>(j, "n", path, 4);
  t.gamma = get<double>(j, "gamma", path, 0.9);
  t.buffer_capacity = get<std::size_t>(j, "buffer", path, 500);
  t.minibatch = get<int>(j, "minibatch", path, 32);
  t.target_sync = get<int>(j, "target_sync", path, 200);
  t.optimizer.learning_rate = get<double>(j, "learning_rate", path, 1e-3);
  t.optimizer.rho = get<double>(j, "rho", path, 0.9);
  t.optimizer.epsilon = get<double>(j, "rms_epsilon", path, 1e-6);
  if (j.contains("epsilon")) {
    const std::string ep = path + ".epsilon";
    const json& e = require_object(j.at("epsilon"), ep);
    reject_unknown(e, ep, {"initial", "decay", "floor"});
    a.epsilon.initial = get<double>(e, "initial", ep, a.epsilon.initial);
    a.epsilon.decay = get<double>(e, "decay", ep, a.epsilon.decay);
    a.epsilon.floor = get<double>(e, "floor", ep, a.epsilon.floor);
    checked(ep, [&] { EpsilonSchedule(a.epsilon.initial, a.epsilon.decay, a.epsilon.floor); });
  }
  checked(path, [&] {
    t.validate();
    nn::RmsProp(1, t.optimizer);
  });
  return a;
}

}  // namespace

std::optional<std::size_t> ExperimentConfig::subject() const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].subject) return i;
  }
  return std::nullopt;
}

ExperimentConfig parse_config(const json& doc) {
  require_object(doc, "<root>");
  reject_unknown(doc, "",
                 {"nodes", "agent", "slots", "seed", "seeds", "window", "checkpoint_every",
                  "dump_replay"});
  ExperimentConfig cfg;
  if (!doc.contains("nodes") || !doc.at("nodes").is_array() || doc.at("nodes").empty()) {
    fail("nodes", "expected a non-empty array");
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < doc.at("nodes").size(); ++i) {
    cfg.nodes.push_back(parse_node(doc.at("nodes")[i], i));
    if (!names.insert(cfg.nodes.back().name).second) {
      fail("nodes[" + std::to_string(i) + "].name", "duplicate node name");
    }
  }
  int dlma = 0, subjects = 0;
  for (const auto& n : cfg.nodes) {
    dlma += n.dlma;
    subjects += n.subject;
  }
  if (dlma > 1) fail("nodes", "at most one dlma node is supported");
  if (subjects > 1) fail("nodes", "at most one subject node is allowed");

  cfg.agent = doc.contains("agent") ? parse_agent(doc.at("agent")) : parse_agent(json::object());
  cfg.slots = get<std::uint64_t>(doc, "slots", "", cfg.slots);
  cfg.seed = get<std::uint64_t>(doc, "seed", "", cfg.seed);
  cfg.seeds = get<int>(doc, "seeds", "", cfg.seeds);
  if (cfg.seeds < 1) fail("seeds", "must be >= 1");
  cfg.window = get<std::size_t>(doc, "window", "", cfg.window);
  if (cfg.window < 1) fail("window", "must be >= 1");
  cfg.checkpoint_every = get<std::uint64_t>(doc, "checkpoint_every", "", 0);
  cfg.dump_replay = get<bool>(doc, "dump_replay", "", false);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  json nodes = json::array();
  for (const auto& n : cfg.nodes) {
    json j;
    j["name"] = n.name;
    if (n.dlma) {
      j["type"] = "dlma";
    } else {
      j["type"] = std::string(kind_name(n.legacy));
      if (const auto* t = std::get_if<TdmaConfig>(&n.legacy)) {
        j["frame"] = t->frame_slots;
        j["pattern"] = t->pattern;
        j["slot_ratio"] = t->slot_ratio;
      } else if (const auto* a = std::get_if<AlohaConfig>(&n.legacy)) {
        j["slot_ratio"] = a->slot_ratio;
        if (a->variant == AlohaVariant::kQ) j["q"] = a->q;
        if (a->variant != AlohaVariant::kQ) j["window"] = a->window;
        if (a->variant == AlohaVariant::kExponentialBackoff) j["max_stage"] = a->max_stage;
      } else {
        const auto& w = std::get<WifiConfig>(n.legacy);
        j["window"] = w.window;
        j["max_stage"] = w.max_stage;
        j["packet_length"] = w.packet_length;
      }
      if (n.subject) j["subject"] = true;
    }
    nodes.push_back(j);
  }
  const TrainerConfig& t = cfg.agent.trainer;
  json agent = {
      {"architecture", std::string(nn::to_string(t.network.architecture))},
      {"hidden_layers", t.network.hidden_layers},
      {"width", t.network.width},
      {"history", t.network.history},
      {"variant", std::string(to_string(t.variant))},
      {"n", t.n_step},
      {"gamma", t.gamma},
      {"buffer", t.buffer_capacity},
      {"minibatch", t.minibatch},
      {"target_sync", t.target_sync},
      {"learning_rate", t.optimizer.learning_rate},
      {"rho", t.optimizer.rho},
      {"rms_epsilon", t.optimizer.epsilon},
      {"epsilon",
       {{"initial", cfg.agent.epsilon.initial},
        {"decay", cfg.agent.epsilon.decay},
        {"floor", cfg.agent.epsilon.floor}}},
  };
  return {{"nodes", nodes},
          {"agent", agent},
          {"slots", cfg.slots},
          {"seed", cfg.seed},
          {"seeds", cfg.seeds},
          {"window", cfg.window},
          {"checkpoint_every", cfg.checkpoint_every},
          {"dump_replay", cfg.dump_replay}};
}

}  // namespace csdlma
