#include "asalpp/io/config_json.hpp"

#include <fstream>
#include <set>

#include "asalpp/core/errors.hpp"

namespace asalpp {

namespace {

using nlohmann::json;

void require_known_keys(const json& obj, const std::set<std::string>& allowed,
                        const std::string& scope) {
  if (!obj.is_object()) throw ConfigError("config: " + scope + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (allowed.find(key) == allowed.end())
      throw ConfigError("config: unknown key \"" + (scope.empty() ? key : scope + "." + key) + "\"");
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (auto it = obj.find(key); it != obj.end()) out = it->template get<T>();
}

SearchMode parse_mode(const std::string& s) {
  if (s == "EST") return SearchMode::kEst;
  if (s == "ETT") return SearchMode::kEtt;
  throw ConfigError("config: mode must be \"EST\" or \"ETT\", got \"" + s + "\"");
}

LeniaConfig parse_substrate(const json& obj) {
  require_known_keys(obj, {"grid_size", "channels", "kernel_count", "dt", "init_patch"},
                     "substrate");
  LeniaConfig c;
  read_field(obj, "grid_size", c.grid_size);
  read_field(obj, "channels", c.channels);
  read_field(obj, "kernel_count", c.kernel_count);
  read_field(obj, "dt", c.dt);
  read_field(obj, "init_patch", c.init_patch);
  return c;
}

EsSettings parse_es(const json& obj) {
  require_known_keys(obj, {"population", "sigma0", "max_stagnation"}, "es");
  EsSettings es;
  read_field(obj, "population", es.population);
  read_field(obj, "sigma0", es.sigma0);
  read_field(obj, "max_stagnation", es.max_stagnation);
  return es;
}

ObjectiveSpec parse_objective(const json& obj) {
  require_known_keys(obj, {"softmax_coefficient", "softmax_sharpness", "checkpoints_per_prompt"},
                     "objective");
  ObjectiveSpec spec;
  read_field(obj, "softmax_coefficient", spec.softmax_coefficient);
  read_field(obj, "softmax_sharpness", spec.softmax_sharpness);
  read_field(obj, "checkpoints_per_prompt", spec.checkpoints_per_prompt);
  return spec;
}

ProviderConfig parse_embedding(const json& obj) {
  require_known_keys(obj,
                     {"kind", "endpoint", "dimension", "image_side", "timeout_seconds",
                      "retry_limit", "max_inflight"},
                     "embedding");
  ProviderConfig c;
  std::string kind = "stub";
  read_field(obj, "kind", kind);
  if (kind == "stub")
    c.kind = ProviderKind::kStub;
  else if (kind == "remote")
    c.kind = ProviderKind::kRemote;
  else
    throw ConfigError("config: embedding.kind must be \"stub\" or \"remote\", got \"" + kind + "\"");
  read_field(obj, "endpoint", c.endpoint);
  read_field(obj, "dimension", c.dimension);
  read_field(obj, "image_side", c.image_side);
  read_field(obj, "timeout_seconds", c.timeout_seconds);
  read_field(obj, "retry_limit", c.retry_limit);
  read_field(obj, "max_inflight", c.max_inflight);
  return c;
}

EvolverConfig parse_evolver(const json& obj) {
  require_known_keys(obj,
                     {"kind", "script", "endpoint", "model", "temperature", "timeout_seconds",
                      "retry_limit", "frames_per_request"},
                     "evolver");
  EvolverConfig c;
  std::string kind = "scripted";
  read_field(obj, "kind", kind);
  if (kind == "scripted")
    c.kind = EvolverConfig::Kind::kScripted;
  else if (kind == "remote")
    c.kind = EvolverConfig::Kind::kRemote;
  else
    throw ConfigError("config: evolver.kind must be \"scripted\" or \"remote\", got \"" + kind + "\"");
  read_field(obj, "script", c.script);
  read_field(obj, "endpoint", c.endpoint);
  read_field(obj, "model", c.model);
  read_field(obj, "temperature", c.temperature);
  read_field(obj, "timeout_seconds", c.timeout_seconds);
  read_field(obj, "retry_limit", c.retry_limit);
  read_field(obj, "frames_per_request", c.frames_per_request);
  return c;
}

TreeConfig parse_tree(const json& obj, const RunConfig& base) {
  require_known_keys(obj, {"branching", "depth", "temperature", "environment_layers"}, "tree");
  TreeConfig t;
  t.base = base;
  read_field(obj, "branching", t.branching);
  read_field(obj, "depth", t.depth);
  read_field(obj, "temperature", t.temperature);
  if (auto it = obj.find("environment_layers"); it != obj.end())
    t.environment_layers = it->get<std::vector<std::vector<std::string>>>();
  return t;
}

}  // namespace

ConfigDocument config_from_json(const json& j) {
  require_known_keys(j,
                     {"mode", "seed_prompt", "outer_iterations", "inner_iterations",
                      "rollout_steps", "run_seed", "workers", "diagnostics", "substrate", "es",
                      "objective", "embedding", "evolver", "tree"},
                     "");
  ConfigDocument doc;
  RunConfig& run = doc.run;
  std::string mode = "ETT";
  read_field(j, "mode", mode);
  run.mode = parse_mode(mode);
  if (auto it = j.find("seed_prompt"); it != j.end())
    run.seed_prompt = it->get<std::string>();
  else
    throw ConfigError("config: \"seed_prompt\" is required");
  read_field(j, "outer_iterations", run.outer_iterations);
  read_field(j, "inner_iterations", run.inner_iterations);
  read_field(j, "run_seed", run.run_seed);
  read_field(j, "workers", run.workers);
  read_field(j, "diagnostics", run.diagnostics);
  if (auto it = j.find("substrate"); it != j.end()) run.substrate = parse_substrate(*it);
  read_field(j, "rollout_steps", run.substrate.rollout_steps);
  if (auto it = j.find("es"); it != j.end()) run.es = parse_es(*it);
  if (auto it = j.find("objective"); it != j.end()) run.objective = parse_objective(*it);
  if (auto it = j.find("embedding"); it != j.end()) run.embedding = parse_embedding(*it);
  if (auto it = j.find("evolver"); it != j.end()) run.evolver = parse_evolver(*it);
  if (auto it = j.find("tree"); it != j.end()) doc.tree = parse_tree(*it, run);
  return doc;
}

nlohmann::json config_to_json(const ConfigDocument& doc) {
  const RunConfig& run = doc.run;
  json j;
  j["mode"] = run.mode == SearchMode::kEst ? "EST" : "ETT";
  j["seed_prompt"] = run.seed_prompt;
  j["outer_iterations"] = run.outer_iterations;
  j["inner_iterations"] = run.inner_iterations;
  j["rollout_steps"] = run.substrate.rollout_steps;
  j["run_seed"] = run.run_seed;
  j["workers"] = run.workers;
  j["diagnostics"] = run.diagnostics;
  j["substrate"] = {{"grid_size", run.substrate.grid_size},
                    {"channels", run.substrate.channels},
                    {"kernel_count", run.substrate.kernel_count},
                    {"dt", run.substrate.dt},
                    {"init_patch", run.substrate.init_patch}};
  j["es"] = {{"population", run.es.population},
             {"sigma0", run.es.sigma0},
             {"max_stagnation", run.es.max_stagnation}};
  j["objective"] = {{"softmax_coefficient", run.objective.softmax_coefficient},
                    {"softmax_sharpness", run.objective.softmax_sharpness},
                    {"checkpoints_per_prompt", run.objective.checkpoints_per_prompt}};
  j["embedding"] = {{"kind", run.embedding.kind == ProviderKind::kRemote ? "remote" : "stub"},
                    {"endpoint", run.embedding.endpoint},
                    {"dimension", run.embedding.dimension},
                    {"image_side", run.embedding.image_side},
                    {"timeout_seconds", run.embedding.timeout_seconds},
                    {"retry_limit", run.embedding.retry_limit},
                    {"max_inflight", run.embedding.max_inflight}};
  j["evolver"] = {{"kind", run.evolver.kind == EvolverConfig::Kind::kRemote ? "remote" : "scripted"},
                  {"script", run.evolver.script},
                  {"endpoint", run.evolver.endpoint},
                  {"model", run.evolver.model},
                  {"temperature", run.evolver.temperature},
                  {"timeout_seconds", run.evolver.timeout_seconds},
                  {"retry_limit", run.evolver.retry_limit},
                  {"frames_per_request", run.evolver.frames_per_request}};
  if (doc.tree) {
    j["tree"] = {{"branching", doc.tree->branching},
                 {"depth", doc.tree->depth},
                 {"temperature", doc.tree->temperature},
                 {"environment_layers", doc.tree->environment_layers}};
  }
  return j;
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
  }
}

void apply_override(nlohmann::json& config, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like dotted.key=value, got \"" + assignment + "\"");
  std::string dotted = assignment.substr(0, eq);
  std::string value_text = assignment.substr(eq + 1);

  json value;
  try {
    value = json::parse(value_text);
  } catch (const json::parse_error&) {
    value = value_text;  // bare strings need no quoting
  }

  json* node = &config;
  std::size_t start = 0;
  for (;;) {
    auto dot = dotted.find('.', start);
    std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override has an empty key segment: \"" + assignment + "\"");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace asalpp
