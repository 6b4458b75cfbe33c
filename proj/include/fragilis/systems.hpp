#pragma once

// Fragility map (threshold x recoverability quadrants), system thresholds
// composed over series/redundant trees, and an illustrative geometric
// degradation model of a threshold under cumulative wear.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fragilis::systems {

struct FragilityProfile {
  double threshold = 1.0;       // stressor magnitude at which the thing breaks, > 0
  double recoverability = 0.0;  // 1 = fully restorable
};

struct QuadrantCutoffs {
  double threshold = 1.0;
  double recoverability = 0.5;
};

// Q1 high threshold / high recoverability (fungi), Q2 high / low (diamond),
// Q3 low / high (fuse), Q4 low / low (egg). A value equal to its cutoff
// counts as high.
enum class Quadrant { Q1, Q2, Q3, Q4 };

std::string_view to_string(Quadrant q);
std::string_view archetype(Quadrant q);

Quadrant classify_quadrant(const FragilityProfile& profile, const QuadrantCutoffs& cutoffs);

enum class NodeKind { Series, Redundant };

struct SystemNode {
  NodeKind kind = NodeKind::Series;
  // Each child is a component id or a nested node.
  std::vector<std::variant<std::string, std::shared_ptr<const SystemNode>>> children;
};

class SystemGraph {
 public:
  // Validates that the tree references every component exactly once and
  // that every threshold is positive.
  SystemGraph(std::map<std::string, FragilityProfile> components, SystemNode root);

  const std::map<std::string, FragilityProfile>& components() const noexcept { return components_; }
  const SystemNode& root() const noexcept { return root_; }
  // True when any redundant node is present (the max rule is an extension
  // beyond weakest-link composition).
  bool uses_redundancy() const;

 private:
  std::map<std::string, FragilityProfile> components_;
  SystemNode root_;
};

// Series node: min over children. Redundant node: max over children.
double system_threshold(const SystemGraph& graph);

struct Degradation {
  std::vector<double> thresholds;  // tau(t) for t = 0..horizon
  std::optional<int> first_break;  // first t with tau(t) <= stressor
};

// Illustrative only: tau(t) = tau0 (1 - rate)^t.
Degradation degrade_threshold(double tau0, double rate, int horizon, double stressor);

}  // namespace fragilis::systems
