#pragma once

#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "asalpp/loop/search_loop.hpp"

namespace asalpp {

/// Phylogenetic-tree search settings. `depth` counts tree levels including
/// the root, so branching B = 2 and depth D = 3 gives at most 1 + 2 + 4
/// nodes. environment_layers, when used, holds one descriptor set of exactly
/// B entries per expansion layer (D - 1 layers).
struct TreeConfig {
  int branching = 2;
  int depth = 3;
  double temperature = 1.0;
  std::vector<std::vector<std::string>> environment_layers;
  RunConfig base;

  void validate() const;
};

struct TreeNode {
  int id = 0;
  std::optional<int> parent;
  int depth = 0;      // root = 0
  PromptChain chain;  // prompts on the path from the root, seed first
  ThetaVector best_theta;
  double best_loss = 0.0;
  Frame final_frame;
  OeSeries oe;
  bool exhausted = false;  // expansion ran out of distinct proposals (or failed)
};

struct TreeHooks {
  std::function<void(const TreeNode&)> on_node;
};

/// Breadth-first growth: the root is one ETT iteration on the seed prompt;
/// each node below the last level collects up to B distinct sibling prompts
/// (10 tries each, counting the node's own lineage as taken), optionally
/// suffixed with that slot's environment descriptor, and optimizes each
/// accepted prompt warm-started from the parent's best theta. Exhaustion
/// stops that node's expansion, never the whole tree.
std::vector<TreeNode> grow_tree(const TreeConfig& config, const EmbeddingProvider& provider,
                                EvolverBackend& evolver, const TreeHooks& hooks = {});

// -- portable tree document (tree.json / DOT) -------------------------------

struct TreeChainEntry {
  std::string text;
  int iteration = 0;
  std::string source;  // "seed" | "evolver" | "evolver+environment"
};

struct TreeNodeSummary {
  int id = 0;
  std::optional<int> parent;
  std::vector<TreeChainEntry> chain;
  double best_loss = 0.0;
  double oe_mean = 0.0;
  double oe_std = 0.0;
  bool exhausted = false;
  std::string final_frame;  // relative path
  std::string theta;        // relative path
};

struct TreeDocument {
  std::vector<TreeNodeSummary> nodes;
};

TreeNodeSummary summarize_node(const TreeNode& node);

/// Serialization round-trips losslessly and byte-identically.
nlohmann::json tree_document_to_json(const TreeDocument& doc);
TreeDocument tree_document_from_json(const nlohmann::json& j);

/// Throws StructuralError unless the nodes form a single rooted tree.
void validate_tree_document(const TreeDocument& doc);

/// DOT graph, one edge per parent link, labeled with each node's newest
/// prompt.
std::string tree_document_to_dot(const TreeDocument& doc);

std::string prompt_source_name(PromptSource source);

}  // namespace asalpp
