#include "asalpp/io/run_store.hpp"

#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "asalpp/core/errors.hpp"
#include "asalpp/core/rng.hpp"
#include "asalpp/io/png_codec.hpp"
#include "asalpp/io/theta_io.hpp"
#include "asalpp/tree/phylo_tree.hpp"

namespace asalpp {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string utc_timestamp(std::chrono::system_clock::time_point now) {
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string make_run_id(std::uint64_t run_seed, std::chrono::system_clock::time_point now) {
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%dT%H%M%SZ", &tm);
  char hash[16];
  std::snprintf(hash, sizeof(hash), "%08" PRIx32,
                static_cast<std::uint32_t>(mix64(run_seed, 0x5EEDULL) >> 32));
  return std::string(stamp) + "_" + hash;
}

namespace {

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void append_floats(std::ofstream& out, const std::vector<float>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(float)));
}

std::vector<float> read_floats(std::ifstream& in, std::size_t count) {
  std::vector<float> v(count);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw IoError("es snapshot: truncated payload");
  return v;
}

}  // namespace

void write_es_snapshot(const SepCmaEs<double>::Snapshot& snapshot, const std::string& path) {
  // JSON has no inf/nan literals; best_loss is +inf until the first tell.
  json best_loss = std::isfinite(snapshot.best_loss) ? json(snapshot.best_loss)
                                                     : json(format_double(snapshot.best_loss));
  json header = {{"dimension", snapshot.mean.size()},
                 {"generation", snapshot.generation},
                 {"stagnation", snapshot.stagnation},
                 {"sigma", snapshot.sigma},
                 {"best_loss", best_loss},
                 {"arrays", {"mean", "diag_cov", "path_sigma", "path_cov", "best_theta"}}};
  std::string header_text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  std::uint32_t len = static_cast<std::uint32_t>(header_text.size());
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  append_floats(out, snapshot.mean);
  append_floats(out, snapshot.diag_cov);
  append_floats(out, snapshot.path_sigma);
  append_floats(out, snapshot.path_cov);
  append_floats(out, snapshot.best_theta);
  if (!out) throw IoError("write failed: " + path);
}

SepCmaEs<double>::Snapshot read_es_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 4);
  if (!in || len > (1u << 20)) throw IoError("es snapshot: bad header length");
  std::string header_text(len, '\0');
  in.read(header_text.data(), len);
  json header = json::parse(header_text);
  SepCmaEs<double>::Snapshot s;
  std::size_t dim = header.at("dimension").get<std::size_t>();
  s.generation = header.at("generation").get<int>();
  s.stagnation = header.at("stagnation").get<int>();
  s.sigma = header.at("sigma").get<double>();
  const json& best_loss = header.at("best_loss");
  s.best_loss = best_loss.is_string() ? std::strtod(best_loss.get<std::string>().c_str(), nullptr)
                                      : best_loss.get<double>();
  s.mean = read_floats(in, dim);
  s.diag_cov = read_floats(in, dim);
  s.path_sigma = read_floats(in, dim);
  s.path_cov = read_floats(in, dim);
  s.best_theta = read_floats(in, dim);
  return s;
}

json prompt_chain_to_json(const PromptChain& chain) {
  json out = json::array();
  for (const auto& e : chain.entries)
    out.push_back({{"text", e.text},
                   {"iteration", e.iteration},
                   {"source", prompt_source_name(e.source)},
                   {"raw_model_response", e.raw_model_response}});
  return out;
}

PromptChain prompt_chain_from_json(const json& j) {
  PromptChain chain;
  for (const auto& e : j) {
    PromptEntry entry;
    entry.text = e.at("text").get<std::string>();
    entry.iteration = e.at("iteration").get<int>();
    std::string source = e.at("source").get<std::string>();
    if (source == "seed")
      entry.source = PromptSource::kSeed;
    else if (source == "evolver")
      entry.source = PromptSource::kEvolver;
    else if (source == "evolver+environment")
      entry.source = PromptSource::kEvolverEnvironment;
    else
      throw ConfigError("prompt chain: unknown source \"" + source + "\"");
    entry.raw_model_response = e.value("raw_model_response", "");
    chain.entries.push_back(std::move(entry));
  }
  return chain;
}

RunStore::RunStore(fs::path output_root, std::string run_id, std::string created_at)
    : dir_(output_root / run_id), run_id_(std::move(run_id)), created_at_(std::move(created_at)) {
  fs::create_directories(dir_);
  fs::create_directories(dir_ / "state");
}

RunStore RunStore::open(const fs::path& run_dir, const std::string& created_at) {
  if (!fs::exists(run_dir / "config.json"))
    throw IoError("not a run directory (missing config.json): " + run_dir.string());
  RunStore store(run_dir.parent_path(), run_dir.filename().string(), created_at);
  if (fs::exists(run_dir / "summary.json")) {
    std::ifstream in(run_dir / "summary.json");
    json summary = json::parse(in);
    store.mode_name_ = summary.value("mode", "");
    store.seed_prompt_ = summary.value("seed_prompt", "");
    auto as_number = [](const json& v) {
      // nlohmann dumps non-finite doubles as null.
      return v.is_number() ? v.get<double>() : std::numeric_limits<double>::infinity();
    };
    for (const auto& row : summary.value("iterations", json::array()))
      store.rows_.push_back(SummaryRow{row.at("iteration").get<int>(),
                                       row.at("prompt").get<std::string>(),
                                       as_number(row.at("best_loss")),
                                       as_number(row.at("oe_mean")),
                                       as_number(row.at("oe_std"))});
  }
  return store;
}

fs::path RunStore::iter_dir(const fs::path& run_dir, int iteration) {
  char name[16];
  std::snprintf(name, sizeof(name), "iter_%02d", iteration);
  return run_dir / name;
}

void RunStore::write_config(const json& config_json) {
  write_text_file(dir_ / "config.json", config_json.dump(2) + "\n");
}

void RunStore::write_iteration(const IterationRecord& record, const PromptChain& chain,
                               const RunConfig& config) {
  mode_name_ = config.mode == SearchMode::kEst ? "EST" : "ETT";
  seed_prompt_ = config.seed_prompt;

  fs::path iter = iter_dir(dir_, record.iteration);
  fs::create_directories(iter / "frames");

  write_text_file(iter / "prompts.json", prompt_chain_to_json(record.chain).dump(2) + "\n");
  write_theta(record.best_theta, config.substrate, (iter / "best_theta.bin").string(), created_at_);

  std::string curve = config.diagnostics
                          ? "generation,gen_best_loss,gen_mean_loss,best_loss_so_far,diag_oe\n"
                          : "generation,gen_best_loss,gen_mean_loss,best_loss_so_far\n";
  for (const auto& g : record.loss_curve) {
    curve += std::to_string(g.generation) + "," + format_double(g.gen_best_loss) + "," +
             format_double(g.gen_mean_loss) + "," + format_double(g.best_loss_so_far);
    if (config.diagnostics)
      curve += "," + (g.diag_oe ? format_double(*g.diag_oe) : std::string("nan"));
    curve += "\n";
  }
  write_text_file(iter / "loss_curve.csv", curve);

  int prompt_index = static_cast<int>(record.chain.size()) - 1;
  std::string oe_csv = "run_id,iteration,prompt_index,oe_mean,oe_std,best_loss\n";
  oe_csv += run_id_ + "," + std::to_string(record.iteration) + "," + std::to_string(prompt_index) +
            "," + format_double(record.oe.mean) + "," + format_double(record.oe.std_dev) + "," +
            format_double(record.best_loss) + "\n";
  write_text_file(iter / "oe.csv", oe_csv);

  for (std::size_t t = 0; t < record.full_frames.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04zu.png", t);
    png_write_file(record.full_frames[t], (iter / "frames" / name).string());
  }

  rows_.push_back(SummaryRow{record.iteration, record.chain.newest(), record.best_loss,
                             record.oe.mean, record.oe.std_dev});
  write_summary_file(false, "");
  write_progress_checkpoint(record.iteration + 1, chain, record.best_theta);
}

void RunStore::write_summary_file(bool truncated, const std::string& reason) const {
  json iterations = json::array();
  for (const auto& row : rows_)
    iterations.push_back({{"iteration", row.iteration},
                          {"prompt", row.prompt},
                          {"best_loss", row.best_loss},
                          {"oe_mean", row.oe_mean},
                          {"oe_std", row.oe_std}});
  double delta = rows_.size() >= 2 ? rows_.back().oe_mean - rows_.front().oe_mean : 0.0;
  json summary = {{"run_id", run_id_},       {"mode", mode_name_},
                  {"seed_prompt", seed_prompt_}, {"truncated", truncated},
                  {"truncation_reason", reason},  {"delta_oe", delta},
                  {"iterations", iterations}};
  write_text_file(dir_ / "summary.json", summary.dump(2) + "\n");
}

void RunStore::finalize_summary(const RunConfig& config, bool truncated, const std::string& reason) {
  mode_name_ = config.mode == SearchMode::kEst ? "EST" : "ETT";
  seed_prompt_ = config.seed_prompt;
  write_summary_file(truncated, reason);
}

void RunStore::write_progress_checkpoint(int next_iteration, const PromptChain& chain,
                                         const ThetaVector& warm_theta) {
  std::ofstream bin(dir_ / "state" / "warm_theta.bin", std::ios::binary | std::ios::trunc);
  bin.write(reinterpret_cast<const char*>(warm_theta.data()),
            static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(warm_theta.size())));
  json checkpoint = {{"next_iteration", next_iteration},
                     {"chain", prompt_chain_to_json(chain)},
                     {"completed_iterations", rows_.size()},
                     {"has_es_snapshot", false}};
  write_text_file(dir_ / "state" / "checkpoint.json", checkpoint.dump(2) + "\n");
}

void RunStore::write_abort_checkpoint(int iteration, const PromptChain& chain,
                                      const SepCmaEs<double>::Snapshot& snapshot) {
  write_es_snapshot(snapshot, (dir_ / "state" / "es_state.bin").string());
  json checkpoint = {{"next_iteration", iteration},
                     {"chain", prompt_chain_to_json(chain)},
                     {"completed_iterations", rows_.size()},
                     {"has_es_snapshot", true}};
  write_text_file(dir_ / "state" / "checkpoint.json", checkpoint.dump(2) + "\n");
}

RunStore::LoadedResume RunStore::load_resume(const fs::path& run_dir) {
  fs::path checkpoint_path = run_dir / "state" / "checkpoint.json";
  if (!fs::exists(checkpoint_path))
    throw IoError("no resume checkpoint in " + run_dir.string());
  std::ifstream in(checkpoint_path);
  json checkpoint = json::parse(in);

  LoadedResume loaded;
  loaded.point.next_iteration = checkpoint.at("next_iteration").get<int>();
  loaded.point.chain = prompt_chain_from_json(checkpoint.at("chain"));
  loaded.completed_iterations = checkpoint.at("completed_iterations").get<int>();

  fs::path warm = run_dir / "state" / "warm_theta.bin";
  if (fs::exists(warm)) loaded.point.warm_theta = read_theta(warm.string());
  if (checkpoint.at("has_es_snapshot").get<bool>())
    loaded.point.es_snapshot = read_es_snapshot((run_dir / "state" / "es_state.bin").string());
  return loaded;
}

}  // namespace asalpp
