#include "fragilis/systems.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fragilis/error.hpp"

namespace fragilis::systems {

namespace {

void collect_ids(const SystemNode& node, std::vector<std::string>& out) {
  if (node.children.empty()) throw DomainError("system nodes must have at least one child");
  for (const auto& child : node.children) {
    if (const auto* id = std::get_if<std::string>(&child)) {
      out.push_back(*id);
    } else {
      const auto& sub = std::get<std::shared_ptr<const SystemNode>>(child);
      if (!sub) throw DomainError("null system node");
      collect_ids(*sub, out);
    }
  }
}

bool any_redundant(const SystemNode& node) {
  if (node.kind == NodeKind::Redundant) return true;
  for (const auto& child : node.children)
    if (const auto* sub = std::get_if<std::shared_ptr<const SystemNode>>(&child))
      if (any_redundant(**sub)) return true;
  return false;
}

double evaluate(const SystemNode& node, const std::map<std::string, FragilityProfile>& components) {
  std::vector<double> values;
  for (const auto& child : node.children) {
    if (const auto* id = std::get_if<std::string>(&child))
      values.push_back(components.at(*id).threshold);
    else
      values.push_back(evaluate(*std::get<std::shared_ptr<const SystemNode>>(child), components));
  }
  return node.kind == NodeKind::Series ? *std::min_element(values.begin(), values.end())
                                       : *std::max_element(values.begin(), values.end());
}

}  // namespace

std::string_view to_string(Quadrant q) {
  switch (q) {
    case Quadrant::Q1: return "Q1";
    case Quadrant::Q2: return "Q2";
    case Quadrant::Q3: return "Q3";
    case Quadrant::Q4: return "Q4";
  }
  return "?";
}

std::string_view archetype(Quadrant q) {
  switch (q) {
    case Quadrant::Q1: return "fungi";
    case Quadrant::Q2: return "diamond";
    case Quadrant::Q3: return "fuse";
    case Quadrant::Q4: return "egg";
  }
  return "?";
}

Quadrant classify_quadrant(const FragilityProfile& profile, const QuadrantCutoffs& cutoffs) {
  if (!(cutoffs.threshold > 0.0) || !(cutoffs.recoverability > 0.0))
    throw DomainError("quadrant cutoffs must be positive");
  const bool high_threshold = profile.threshold >= cutoffs.threshold;
  const bool high_recovery = profile.recoverability >= cutoffs.recoverability;
  if (high_threshold) return high_recovery ? Quadrant::Q1 : Quadrant::Q2;
  return high_recovery ? Quadrant::Q3 : Quadrant::Q4;
}

SystemGraph::SystemGraph(std::map<std::string, FragilityProfile> components, SystemNode root)
    : components_(std::move(components)), root_(std::move(root)) {
  if (components_.empty()) throw DomainError("system graph needs at least one component");
  for (const auto& [id, p] : components_) {
    if (!(p.threshold > 0.0) || !std::isfinite(p.threshold))
      throw DomainError("component '" + id + "' threshold must be > 0");
    if (!(p.recoverability >= 0.0 && p.recoverability <= 1.0))
      throw DomainError("component '" + id + "' recoverability must lie in [0, 1]");
  }
  std::vector<std::string> ids;
  collect_ids(root_, ids);
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!components_.contains(id)) throw DomainError("tree references unknown component '" + id + "'");
    if (!seen.insert(id).second) throw DomainError("component '" + id + "' referenced more than once");
  }
  if (seen.size() != components_.size()) throw DomainError("every component must appear in the tree");
}

bool SystemGraph::uses_redundancy() const { return any_redundant(root_); }

double system_threshold(const SystemGraph& graph) { return evaluate(graph.root(), graph.components()); }

Degradation degrade_threshold(double tau0, double rate, int horizon, double stressor) {
  if (!(tau0 > 0.0)) throw DomainError("initial threshold must be > 0");
  if (!(rate >= 0.0 && rate < 1.0)) throw DomainError("degradation rate must lie in [0, 1)");
  if (horizon < 0) throw DomainError("horizon must be >= 0");
  Degradation out;
  double tau = tau0;
  for (int t = 0; t <= horizon; ++t) {
    out.thresholds.push_back(tau);
    if (!out.first_break && tau <= stressor) out.first_break = t;
    tau *= 1.0 - rate;
  }
  return out;
}

}  // namespace fragilis::systems
