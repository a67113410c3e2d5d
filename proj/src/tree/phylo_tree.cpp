#include "asalpp/tree/phylo_tree.hpp"

#include <deque>
#include <map>
#include <set>
#include <sstream>

#include "asalpp/core/errors.hpp"

namespace asalpp {

void TreeConfig::validate() const {
  if (branching < 1) throw ConfigError("tree: branching must be >= 1");
  if (depth < 1) throw ConfigError("tree: depth must be >= 1");
  if (temperature < 0.0) throw ConfigError("tree: temperature must be >= 0");
  if (!environment_layers.empty()) {
    if (static_cast<int>(environment_layers.size()) != depth - 1)
      throw ConfigError("tree: environment_layers must hold depth-1 = " +
                        std::to_string(depth - 1) + " layers, got " +
                        std::to_string(environment_layers.size()));
    for (const auto& layer : environment_layers)
      if (static_cast<int>(layer.size()) != branching)
        throw ConfigError("tree: each environment layer must hold exactly branching = " +
                          std::to_string(branching) + " descriptors");
  }
  base.validate();
  if (base.substrate.rollout_steps < depth)
    throw ConfigError("tree: rollout_steps must be >= depth so temporal checkpoints fit");
}

std::string prompt_source_name(PromptSource source) {
  switch (source) {
    case PromptSource::kSeed: return "seed";
    case PromptSource::kEvolver: return "evolver";
    case PromptSource::kEvolverEnvironment: return "evolver+environment";
  }
  return "evolver";
}

namespace {

PromptSource prompt_source_from_name(const std::string& name) {
  if (name == "seed") return PromptSource::kSeed;
  if (name == "evolver") return PromptSource::kEvolver;
  if (name == "evolver+environment") return PromptSource::kEvolverEnvironment;
  throw ConfigError("tree: unknown prompt source \"" + name + "\"");
}

}  // namespace

std::vector<TreeNode> grow_tree(const TreeConfig& config, const EmbeddingProvider& provider,
                                EvolverBackend& evolver, const TreeHooks& hooks) {
  config.validate();

  // Trees always optimize the full lineage (ETT semantics).
  RunConfig base = config.base;
  base.mode = SearchMode::kEtt;

  std::vector<TreeNode> nodes;
  auto optimize_node = [&](TreeNode& node, const ThetaVector& warm) {
    std::uint64_t es_seed = mix64(base.run_seed, 0x7EE5u + static_cast<std::uint64_t>(node.id));
    InnerResult inner =
        run_inner(warm, node.chain, base, provider, es_seed, node.depth + 1);
    if (!inner.completed)
      throw ProviderError("", 0, "tree node " + std::to_string(node.id) +
                                     " aborted by provider error: " + inner.error);
    node.best_theta = inner.record.best_theta;
    node.best_loss = inner.record.best_loss;
    node.final_frame = inner.record.full_frames.back();
    node.oe = inner.record.oe;
    return std::move(inner.record.full_frames);
  };

  TreeNode root;
  root.id = 0;
  root.depth = 0;
  root.chain = PromptChain::from_seed(base.seed_prompt);
  std::vector<Frame> root_frames = optimize_node(root, initial_theta(base.substrate));
  nodes.push_back(root);

  // Frontier holds (node id, full rollout frames for the evolver video).
  std::deque<std::pair<int, std::vector<Frame>>> frontier;
  frontier.emplace_back(0, std::move(root_frames));

  while (!frontier.empty()) {
    auto [node_id, frames] = std::move(frontier.front());
    frontier.pop_front();
    // Children are appended to `nodes` below, so keep copies rather than a
    // reference into the vector.
    const int parent_depth = nodes[static_cast<std::size_t>(node_id)].depth;
    const PromptChain parent_chain = nodes[static_cast<std::size_t>(node_id)].chain;
    const ThetaVector parent_theta = nodes[static_cast<std::size_t>(node_id)].best_theta;
    if (parent_depth + 1 >= config.depth) continue;

    // Lineage prompts count as taken: a proposal repeating any prompt on the
    // path to the root is not new.
    std::set<std::string> existing;
    for (const auto& text : parent_chain.texts()) existing.insert(normalize_text(text));

    EvolverRequest request;
    std::vector<int> frame_idx =
        evenly_spaced_indices(static_cast<int>(frames.size()), base.evolver.frames_per_request);
    for (int idx : frame_idx) request.frames.push_back(frames[static_cast<std::size_t>(idx)]);
    request.prompt_chain = parent_chain;
    request.iteration = parent_depth + 1;
    request.temperature = config.temperature;
    request.mode = SearchMode::kEtt;

    const std::vector<std::string>* layer = nullptr;
    if (!config.environment_layers.empty())
      layer = &config.environment_layers[static_cast<std::size_t>(parent_depth)];

    std::vector<Proposal> accepted;
    for (int slot = 0; slot < config.branching; ++slot) {
      request.environment_suffix =
          layer ? std::optional<std::string>((*layer)[static_cast<std::size_t>(slot)]) : std::nullopt;
      std::optional<Proposal> proposal;
      try {
        proposal = propose_distinct(request, evolver, existing, 10, base.evolver.retry_limit);
      } catch (const std::exception&) {
        nodes[static_cast<std::size_t>(node_id)].exhausted = true;
        break;
      }
      if (!proposal) {
        // Out of new prompts for this expansion; later slots are hopeless.
        nodes[static_cast<std::size_t>(node_id)].exhausted = true;
        break;
      }
      existing.insert(normalize_text(proposal->text));
      accepted.push_back(std::move(*proposal));
    }

    for (std::size_t slot = 0; slot < accepted.size(); ++slot) {
      TreeNode child;
      child.id = static_cast<int>(nodes.size());
      child.parent = node_id;
      child.depth = parent_depth + 1;
      child.chain = parent_chain;
      PromptSource source = layer ? PromptSource::kEvolverEnvironment : PromptSource::kEvolver;
      child.chain.append(PromptEntry{accepted[slot].text, parent_depth + 2, source,
                                     accepted[slot].raw_model_response});
      std::vector<Frame> child_frames;
      try {
        child_frames = optimize_node(child, parent_theta);
      } catch (const std::exception&) {
        nodes[static_cast<std::size_t>(node_id)].exhausted = true;
        continue;
      }
      nodes.push_back(child);
      frontier.emplace_back(child.id, std::move(child_frames));
    }
    if (hooks.on_node) hooks.on_node(nodes[static_cast<std::size_t>(node_id)]);
  }

  // Leaves and exhausted nodes were only reported above when expanded;
  // report the rest once the tree is final.
  if (hooks.on_node)
    for (const auto& n : nodes)
      if (n.depth + 1 >= config.depth) hooks.on_node(n);

  return nodes;
}

TreeNodeSummary summarize_node(const TreeNode& node) {
  TreeNodeSummary s;
  s.id = node.id;
  s.parent = node.parent;
  for (const auto& e : node.chain.entries)
    s.chain.push_back(TreeChainEntry{e.text, e.iteration, prompt_source_name(e.source)});
  s.best_loss = node.best_loss;
  s.oe_mean = node.oe.mean;
  s.oe_std = node.oe.std_dev;
  s.exhausted = node.exhausted;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "node_%03d", node.id);
  s.final_frame = std::string(buf) + "/final.png";
  s.theta = std::string(buf) + "/best_theta.bin";
  return s;
}

nlohmann::json tree_document_to_json(const TreeDocument& doc) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : doc.nodes) {
    nlohmann::json chain = nlohmann::json::array();
    for (const auto& e : n.chain)
      chain.push_back({{"text", e.text}, {"iteration", e.iteration}, {"source", e.source}});
    nlohmann::json node = {{"id", n.id},
                           {"parent", n.parent ? nlohmann::json(*n.parent) : nlohmann::json(nullptr)},
                           {"chain", chain},
                           {"best_loss", n.best_loss},
                           {"oe_mean", n.oe_mean},
                           {"oe_std", n.oe_std},
                           {"exhausted", n.exhausted},
                           {"final_frame", n.final_frame},
                           {"theta", n.theta}};
    nodes.push_back(node);
  }
  return nlohmann::json{{"nodes", nodes}};
}

TreeDocument tree_document_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array())
    throw StructuralError("tree document: missing \"nodes\" array");
  TreeDocument doc;
  for (const auto& node : j["nodes"]) {
    TreeNodeSummary s;
    s.id = node.at("id").get<int>();
    if (!node.at("parent").is_null()) s.parent = node.at("parent").get<int>();
    for (const auto& e : node.at("chain")) {
      TreeChainEntry entry;
      entry.text = e.at("text").get<std::string>();
      entry.iteration = e.at("iteration").get<int>();
      entry.source = e.at("source").get<std::string>();
      prompt_source_from_name(entry.source);  // validate
      s.chain.push_back(std::move(entry));
    }
    s.best_loss = node.at("best_loss").get<double>();
    s.oe_mean = node.at("oe_mean").get<double>();
    s.oe_std = node.at("oe_std").get<double>();
    s.exhausted = node.at("exhausted").get<bool>();
    s.final_frame = node.at("final_frame").get<std::string>();
    s.theta = node.at("theta").get<std::string>();
    doc.nodes.push_back(std::move(s));
  }
  validate_tree_document(doc);
  return doc;
}

void validate_tree_document(const TreeDocument& doc) {
  if (doc.nodes.empty()) throw StructuralError("tree document: empty");
  std::map<int, const TreeNodeSummary*> by_id;
  int roots = 0;
  for (const auto& n : doc.nodes) {
    if (!by_id.emplace(n.id, &n).second)
      throw StructuralError("tree document: duplicate node id " + std::to_string(n.id));
    if (!n.parent) ++roots;
  }
  if (roots != 1) throw StructuralError("tree document: expected exactly one root, found " +
                                        std::to_string(roots));
  for (const auto& n : doc.nodes) {
    if (!n.parent) continue;
    // Walk to the root; a missing parent is an orphan, revisiting is a cycle.
    std::set<int> seen{n.id};
    const TreeNodeSummary* cur = &n;
    while (cur->parent) {
      auto it = by_id.find(*cur->parent);
      if (it == by_id.end())
        throw StructuralError("tree document: node " + std::to_string(cur->id) +
                              " has missing parent " + std::to_string(*cur->parent));
      cur = it->second;
      if (!seen.insert(cur->id).second)
        throw StructuralError("tree document: cycle through node " + std::to_string(cur->id));
    }
  }
}

std::string tree_document_to_dot(const TreeDocument& doc) {
  validate_tree_document(doc);
  std::ostringstream out;
  out << "digraph asalpp_tree {\n";
  out << "  node [shape=box];\n";
  for (const auto& n : doc.nodes) {
    std::string label = n.chain.empty() ? "" : n.chain.back().text;
    std::string escaped;
    for (char c : label) {
      if (c == '"' || c == '\\') escaped.push_back('\\');
      escaped.push_back(c);
    }
    out << "  n" << n.id << " [label=\"" << escaped << "\"];\n";
  }
  for (const auto& n : doc.nodes)
    if (n.parent) out << "  n" << *n.parent << " -> n" << n.id << ";\n";
  out << "}\n";
  return out.str();
}

}  // namespace asalpp
