#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gridstream/dataset.hpp"
#include "gridstream/result.hpp"

namespace gridstream {

enum class Variation { kPerCell = 1, kPerLat = 2, kPerLon = 3, kGlobal = 4 };

// Accepts 1..4. Throws ConfigError.
Variation variation_from_int(int v);
int to_int(Variation v) noexcept;

enum class CombineMode {
  kExact,          // mergeable summaries, associative
  kPaperPairwise,  // (a + b) / 2 in partition order; MEAN only, order-dependent
};

CombineMode parse_combine_mode(std::string_view text);  // "exact" | "paper-pairwise"
std::string_view to_string(CombineMode mode) noexcept;

// Output shape for a variation over `g`: (nlat, nlon), (nlat, 1), (1, nlon)
// or (1, 1).
GridGeometry result_geometry(const GridGeometry& g, Variation v);

// Canonical plan over `source`:
//   FILTER(has-variable) -> MAP(select) -> [AXIS_REDUCE x0..2] -> COMBINE -> FINALIZE
// STDDEV inserts MAP(lift-moments) before the reductions and MAP(variance)
// after COMBINE. Throws ConfigError for pairwise mode with a stat other
// than MEAN.
PlanNodePtr build_plan(PlanNodePtr source, StatKind stat, Variation variation,
                       const std::string& variable, CombineMode mode = CombineMode::kExact);
// Same plan over an empty source; for inspecting structure.
PlanNodePtr build_plan(StatKind stat, Variation variation, const std::string& variable,
                       CombineMode mode = CombineMode::kExact);

// The single COMBINE node of a canonical plan.
PlanNodePtr combine_node(const PlanNodePtr& root);
// Re-roots the nodes above the plan's COMBINE on `combined`, the already
// combined state, and evaluates them. Returns nullopt for empty state.
std::optional<GridField> apply_tail(const PlanNodePtr& root, const Element& combined);

struct StatRun {
  ResultTensor result;
  std::vector<BatchMetrics> metrics;  // one job per variable
  std::uint64_t invocations = 0;
};

// Runs one plan per variable, serially. Throws VariableAbsentError when no
// file holds a requested variable.
StatRun run_stat_detailed(const Dataset& files, StatKind stat, Variation variation,
                          const std::vector<std::string>& variables,
                          CombineMode mode = CombineMode::kExact);
ResultTensor run_stat(const Dataset& files, StatKind stat, Variation variation,
                      const std::vector<std::string>& variables,
                      CombineMode mode = CombineMode::kExact);

// Reference implementation: pools the flat multiset of valid values per
// output cell and computes the statistic directly (two passes for STDDEV).
// Files without the variable are skipped; no data gives a fully masked
// result (1x1 when no geometry is known).
ResultTensor oracle_stat(const std::vector<GridTensor>& files, StatKind stat, Variation variation,
                         const std::string& variable);

}  // namespace gridstream
