#include "asalpp/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>

#include "asalpp/core/errors.hpp"
#include "asalpp/embed/remote_provider.hpp"
#include "asalpp/io/config_json.hpp"
#include "asalpp/io/gif_writer.hpp"
#include "asalpp/io/png_codec.hpp"
#include "asalpp/io/run_store.hpp"
#include "asalpp/io/theta_io.hpp"
#include "asalpp/loop/search_loop.hpp"
#include "asalpp/tree/phylo_tree.hpp"

namespace asalpp {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitTruncated = 2;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_root = "runs";
  std::string run_id;
  int workers = -1;  // -1: keep config value
};

ConfigDocument load_config(const CommonArgs& args) {
  if (args.config_path.empty()) throw ConfigError("--config is required");
  json raw = load_json_file(args.config_path);
  for (const auto& assignment : args.overrides) apply_override(raw, assignment);
  ConfigDocument doc = config_from_json(raw);
  if (args.workers >= 0) {
    doc.run.workers = args.workers;
    if (doc.tree) doc.tree->base.workers = args.workers;
  }
  return doc;
}

void print_iteration(const IterationRecord& record, int total) {
  std::cout << "[iter " << record.iteration << "/" << total << "] prompt=\""
            << record.chain.newest() << "\" best_loss=" << format_double(record.best_loss)
            << " oe=" << format_double(record.oe.mean) << "+/-" << format_double(record.oe.std_dev)
            << "\n"
            << std::flush;
}

int cmd_run(const CommonArgs& args) {
  ConfigDocument doc = load_config(args);
  RunConfig& config = doc.run;
  config.validate();

  auto provider = make_embedding_provider(config.embedding);
  auto evolver = make_evolver_backend(config.evolver);

  auto now = std::chrono::system_clock::now();
  std::string run_id = args.run_id.empty() ? make_run_id(config.run_seed, now) : args.run_id;
  RunStore store(args.output_root, run_id, utc_timestamp(now));
  store.write_config(config_to_json(doc));
  std::cout << "run " << store.run_id() << " -> " << store.dir().string() << "\n";

  RunHooks hooks;
  hooks.on_iteration = [&](const IterationRecord& record, const PromptChain& chain) {
    store.write_iteration(record, chain, config);
    print_iteration(record, config.outer_iterations);
  };
  hooks.on_abort_checkpoint = [&](int iteration, const PromptChain& chain,
                                  const SepCmaEs<double>::Snapshot& snapshot) {
    store.write_abort_checkpoint(iteration, chain, snapshot);
    std::cerr << "checkpoint saved; resume with: asalpp resume --run " << store.dir().string()
              << "\n";
  };

  RunResult result = run_asalpp(config, *provider, *evolver, hooks);
  store.finalize_summary(config, result.truncated, result.truncation_reason);
  RunMetrics metrics = evaluate_run(result.records);
  std::cout << "delta_oe=" << format_double(metrics.delta_oe)
            << (result.truncated ? " (truncated: " + result.truncation_reason + ")" : "") << "\n";
  return result.truncated ? kExitTruncated : kExitOk;
}

int cmd_resume(const std::string& run_dir_arg, int workers) {
  fs::path run_dir(run_dir_arg);
  json raw = load_json_file((run_dir / "config.json").string());
  ConfigDocument doc = config_from_json(raw);
  RunConfig& config = doc.run;
  if (workers >= 0) config.workers = workers;
  config.validate();

  RunStore::LoadedResume loaded = RunStore::load_resume(run_dir);
  if (loaded.point.next_iteration > config.outer_iterations) {
    std::cout << "run already complete\n";
    return kExitOk;
  }

  auto provider = make_embedding_provider(config.embedding);
  auto evolver = make_evolver_backend(config.evolver);
  RunStore store = RunStore::open(run_dir, utc_timestamp(std::chrono::system_clock::now()));
  std::cout << "resuming " << store.run_id() << " at iteration " << loaded.point.next_iteration
            << "\n";

  RunHooks hooks;
  hooks.on_iteration = [&](const IterationRecord& record, const PromptChain& chain) {
    store.write_iteration(record, chain, config);
    print_iteration(record, config.outer_iterations);
  };
  hooks.on_abort_checkpoint = [&](int iteration, const PromptChain& chain,
                                  const SepCmaEs<double>::Snapshot& snapshot) {
    store.write_abort_checkpoint(iteration, chain, snapshot);
  };

  RunResult result = run_asalpp(config, *provider, *evolver, hooks, &loaded.point);
  store.finalize_summary(config, result.truncated, result.truncation_reason);
  return result.truncated ? kExitTruncated : kExitOk;
}

std::vector<fs::path> sorted_pngs(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

OeSeries score_frame_dir(const fs::path& dir, const EmbeddingProvider& provider) {
  std::vector<fs::path> files = sorted_pngs(dir);
  if (files.size() < 2)
    throw ConfigError("score: need at least 2 frames in " + dir.string() + ", found " +
                      std::to_string(files.size()));
  std::vector<Frame> frames;
  frames.reserve(files.size());
  for (const auto& f : files) frames.push_back(png_read_file(f.string()));
  return oe_score(provider.embed_image_batch(frames));
}

int cmd_score(const std::string& run_dir_arg, const std::string& frames_dir_arg,
              const CommonArgs& args) {
  if (run_dir_arg.empty() == frames_dir_arg.empty())
    throw ConfigError("score: pass exactly one of --run or --frames");

  if (!frames_dir_arg.empty()) {
    ProviderConfig embedding;  // stub defaults unless a config is given
    if (!args.config_path.empty()) embedding = load_config(args).run.embedding;
    auto provider = make_embedding_provider(embedding);
    fs::path dir(frames_dir_arg);
    OeSeries oe = score_frame_dir(dir, *provider);
    std::string csv = "run_id,iteration,prompt_index,oe_mean,oe_std,best_loss\n" +
                      dir.filename().string() + ",0,0," + format_double(oe.mean) + "," +
                      format_double(oe.std_dev) + ",nan\n";
    std::ofstream out(dir / "oe.csv", std::ios::trunc);
    out << csv;
    std::cout << "oe=" << format_double(oe.mean) << "+/-" << format_double(oe.std_dev) << "\n";
    return kExitOk;
  }

  fs::path run_dir(run_dir_arg);
  json raw = load_json_file((run_dir / "config.json").string());
  ConfigDocument doc = config_from_json(raw);
  auto provider = make_embedding_provider(doc.run.embedding);

  json summary;
  {
    std::ifstream in(run_dir / "summary.json");
    if (!in) throw IoError("score: missing summary.json in " + run_dir.string());
    summary = json::parse(in);
  }
  std::string run_id = summary.at("run_id").get<std::string>();

  for (const auto& row : summary.at("iterations")) {
    int iteration = row.at("iteration").get<int>();
    fs::path iter = RunStore::iter_dir(run_dir, iteration);
    OeSeries oe = score_frame_dir(iter / "frames", *provider);

    json prompts = json::parse(std::ifstream(iter / "prompts.json"));
    int prompt_index = static_cast<int>(prompts.size()) - 1;
    double best_loss = row.at("best_loss").get<double>();

    std::string csv = "run_id,iteration,prompt_index,oe_mean,oe_std,best_loss\n" + run_id + "," +
                      std::to_string(iteration) + "," + std::to_string(prompt_index) + "," +
                      format_double(oe.mean) + "," + format_double(oe.std_dev) + "," +
                      format_double(best_loss) + "\n";
    std::ofstream out(iter / "oe.csv", std::ios::trunc);
    out << csv;
    std::cout << "iter " << iteration << " oe=" << format_double(oe.mean) << "+/-"
              << format_double(oe.std_dev) << "\n";
  }
  return kExitOk;
}

int cmd_render(const std::string& theta_path, const CommonArgs& args, int steps_override,
               const std::string& out_dir_arg, const std::string& gif_path) {
  ConfigDocument doc = load_config(args);
  LeniaConfig substrate = doc.run.substrate;
  if (steps_override >= 0) substrate.rollout_steps = steps_override;

  ThetaVector theta = read_theta(theta_path, substrate.theta_length());

  std::vector<Frame> frames;
  if (substrate.rollout_steps == 0) {
    LeniaConfig probe = substrate;
    probe.rollout_steps = 1;  // keep the config valid; we only render step 0
    frames.push_back(render(init_state(theta, probe), probe));
  } else {
    std::vector<int> all(static_cast<std::size_t>(substrate.rollout_steps) + 1);
    for (int t = 0; t <= substrate.rollout_steps; ++t) all[static_cast<std::size_t>(t)] = t;
    frames = rollout(theta, substrate, all).frames;
  }

  fs::path out_dir(out_dir_arg.empty() ? "rendered" : out_dir_arg);
  fs::create_directories(out_dir);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04zu.png", t);
    png_write_file(frames[t], (out_dir / name).string());
  }
  if (!gif_path.empty()) gif_write_file(frames, gif_path);
  std::cout << "wrote " << frames.size() << " frames to " << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_tree(const CommonArgs& args) {
  ConfigDocument doc = load_config(args);
  if (!doc.tree) throw ConfigError("tree: config has no \"tree\" section");
  TreeConfig& config = *doc.tree;
  config.validate();  // fails fast (layer shape etc.) before any compute

  auto provider = make_embedding_provider(config.base.embedding);
  auto evolver = make_evolver_backend(config.base.evolver);

  auto now = std::chrono::system_clock::now();
  std::string run_id = args.run_id.empty() ? make_run_id(config.base.run_seed, now) : args.run_id;
  std::string created_at = utc_timestamp(now);
  fs::path dir = fs::path(args.output_root) / run_id;
  fs::create_directories(dir);
  std::cout << "tree " << run_id << " -> " << dir.string() << "\n";

  TreeHooks hooks;
  hooks.on_node = [&](const TreeNode& node) {
    char name[32];
    std::snprintf(name, sizeof(name), "node_%03d", node.id);
    fs::path node_dir = dir / name;
    fs::create_directories(node_dir);
    write_theta(node.best_theta, config.base.substrate, (node_dir / "best_theta.bin").string(),
                created_at);
    png_write_file(node.final_frame, (node_dir / "final.png").string());
    std::ofstream(node_dir / "prompts.json") << prompt_chain_to_json(node.chain).dump(2) << "\n";
  };

  std::vector<TreeNode> nodes = grow_tree(config, *provider, *evolver, hooks);

  TreeDocument tree_doc;
  for (const auto& n : nodes) tree_doc.nodes.push_back(summarize_node(n));
  std::ofstream(dir / "tree.json") << tree_document_to_json(tree_doc).dump(2) << "\n";
  std::ofstream(dir / "tree.dot") << tree_document_to_dot(tree_doc);

  std::ofstream(dir / "config.json") << config_to_json(doc).dump(2) << "\n";
  std::cout << "tree of " << nodes.size() << " nodes written\n";
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"ASAL++: foundation-model-driven open-ended search in Lenia"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string run_dir, frames_dir, theta_path, out_dir, gif_path;
  int steps_override = -1;

  auto add_common = [&](CLI::App* cmd, bool with_config = true) {
    if (with_config) cmd->add_option("--config", args.config_path, "config JSON path");
    cmd->add_option("--overrides", args.overrides, "dotted.key=value config override")
        ->take_all();
    cmd->add_option("--workers", args.workers, "candidate evaluation threads");
  };

  CLI::App* run = app.add_subcommand("run", "run ASAL++ (EST or ETT)");
  add_common(run);
  run->add_option("--out", args.output_root, "output root directory");
  run->add_option("--run-id", args.run_id, "fixed run id (default: timestamp + seed hash)");

  CLI::App* tree = app.add_subcommand("tree", "grow a phylogenetic tree of trajectories");
  add_common(tree);
  tree->add_option("--out", args.output_root, "output root directory");
  tree->add_option("--run-id", args.run_id, "fixed tree id");

  CLI::App* score = app.add_subcommand("score", "recompute OE from stored frames");
  add_common(score);
  score->add_option("--run", run_dir, "run directory to re-score");
  score->add_option("--frames", frames_dir, "bare directory of PNG frames");

  CLI::App* render = app.add_subcommand("render", "re-simulate a stored theta");
  add_common(render);
  render->add_option("--theta", theta_path, "theta .bin file")->required();
  render->add_option("--steps", steps_override, "override rollout steps (0 = initial state only)");
  render->add_option("--out", out_dir, "frame output directory");
  render->add_option("--gif", gif_path, "also write an animated GIF here");

  CLI::App* resume = app.add_subcommand("resume", "continue an interrupted run");
  resume->add_option("--run", run_dir, "run directory")->required();
  resume->add_option("--workers", args.workers, "candidate evaluation threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    if (run->parsed()) return cmd_run(args);
    if (tree->parsed()) return cmd_tree(args);
    if (score->parsed()) return cmd_score(run_dir, frames_dir, args);
    if (render->parsed()) return cmd_render(theta_path, args, steps_override, out_dir, gif_path);
    if (resume->parsed()) return cmd_resume(run_dir, args.workers);
  } catch (const ProviderError& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace asalpp
