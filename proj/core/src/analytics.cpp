#include "gridstream/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gridstream/errors.hpp"

namespace gridstream {

Variation variation_from_int(int v) {
  if (v < 1 || v > 4) throw ConfigError("variation must be 1..4, got " + std::to_string(v));
  return static_cast<Variation>(v);
}

int to_int(Variation v) noexcept { return static_cast<int>(v); }

CombineMode parse_combine_mode(std::string_view text) {
  if (text == "exact") return CombineMode::kExact;
  if (text == "paper-pairwise") return CombineMode::kPaperPairwise;
  throw ConfigError("combine mode must be exact or paper-pairwise, got '" + std::string(text) + "'");
}

std::string_view to_string(CombineMode mode) noexcept {
  return mode == CombineMode::kExact ? "exact" : "paper-pairwise";
}

GridGeometry result_geometry(const GridGeometry& g, Variation v) {
  GridGeometry out = g;
  if (v == Variation::kPerLat || v == Variation::kGlobal) out.nlon = 1;
  if (v == Variation::kPerLon || v == Variation::kGlobal) out.nlat = 1;
  return out;
}

PlanNodePtr build_plan(PlanNodePtr source, StatKind stat, Variation variation,
                       const std::string& variable, CombineMode mode) {
  if (mode == CombineMode::kPaperPairwise && stat != StatKind::kMean) {
    throw ConfigError("paper-pairwise combine is only defined for mean");
  }
  const bool moments = stat == StatKind::kStddev;
  auto node = PlanNode::filter(std::move(source), {"has-variable", variable});
  node = PlanNode::map(node, {"select", variable});
  if (moments) node = PlanNode::map(node, {"lift-moments", {}});
  if (variation == Variation::kPerLat || variation == Variation::kGlobal) {
    node = PlanNode::axis_reduce(node, Axis::kLon);
  }
  if (variation == Variation::kPerLon || variation == Variation::kGlobal) {
    node = PlanNode::axis_reduce(node, Axis::kLat);
  }
  node = PlanNode::combine(node, mode == CombineMode::kExact ? "merge" : "pairwise-mean");
  if (moments) node = PlanNode::map(node, {"variance", {}});
  return PlanNode::finalize(node, stat);
}

PlanNodePtr build_plan(StatKind stat, Variation variation, const std::string& variable,
                       CombineMode mode) {
  return build_plan(PlanNode::source({}), stat, variation, variable, mode);
}

PlanNodePtr combine_node(const PlanNodePtr& root) {
  for (PlanNodePtr n = root; n; n = n->parents().empty() ? nullptr : n->parents().front()) {
    if (n->op() == PlanOp::kCombine) return n;
  }
  throw TypeError("plan has no COMBINE node");
}

std::optional<GridField> apply_tail(const PlanNodePtr& root, const Element& combined) {
  if (const auto* s = std::get_if<CellSummaries>(&combined); s && s->is_identity()) {
    return std::nullopt;
  }
  const CombineInputs inputs{combined};
  EvalContext ctx;
  ctx.combine_inputs = [&inputs](const PlanNode&) -> const CombineInputs& { return inputs; };
  Payload out = evaluate_partition(*root, 0, ctx);
  if (out.empty()) return std::nullopt;
  return std::get<GridField>(out.front());
}

StatRun run_stat_detailed(const Dataset& files, StatKind stat, Variation variation,
                          const std::vector<std::string>& variables, CombineMode mode) {
  StatRun run;
  for (const auto& variable : variables) {
    const auto root = build_plan(files.lineage(), stat, variation, variable, mode);
    const Dataset plan = Dataset::from_plan(files.store(), root, files.cluster());
    BatchMetrics metrics;
    const auto elements = plan.collect(&metrics);
    run.metrics.push_back(metrics);
    run.invocations += metrics.operator_invocations;
    if (elements.empty()) throw VariableAbsentError(variable);
    run.result.add(stat, variable, std::get<GridField>(elements.front().second).renamed(variable));
  }
  return run;
}

ResultTensor run_stat(const Dataset& files, StatKind stat, Variation variation,
                      const std::vector<std::string>& variables, CombineMode mode) {
  return run_stat_detailed(files, stat, variation, variables, mode).result;
}

ResultTensor oracle_stat(const std::vector<GridTensor>& files, StatKind stat, Variation variation,
                         const std::string& variable) {
  const GridField* first = nullptr;
  for (const auto& t : files) {
    if ((first = t.find(variable))) break;
  }
  ResultTensor result;
  if (first == nullptr) {
    result.add(stat, variable, GridField::fully_masked(GridGeometry::canonical(1, 1), variable));
    return result;
  }
  const GridGeometry g = first->geometry();
  const GridGeometry out = result_geometry(g, variation);

  std::vector<std::vector<double>> pools(out.cells());
  for (const auto& t : files) {
    const GridField* f = t.find(variable);
    if (f == nullptr) continue;
    if (f->geometry() != g) throw GeometryError("oracle inputs differ in geometry");
    for (std::uint32_t r = 0; r < g.nlat; ++r) {
      for (std::uint32_t c = 0; c < g.nlon; ++c) {
        if (!f->valid_at(r, c)) continue;
        const std::uint32_t orow = out.nlat == 1 ? 0 : r;
        const std::uint32_t ocol = out.nlon == 1 ? 0 : c;
        pools[static_cast<std::size_t>(orow) * out.nlon + ocol].push_back(f->at(r, c));
      }
    }
  }

  std::vector<double> values(out.cells(), 0.0);
  std::vector<std::uint8_t> mask(out.cells(), 0);
  for (std::size_t i = 0; i < pools.size(); ++i) {
    const auto& p = pools[i];
    if (p.empty()) continue;
    mask[i] = 1;
    switch (stat) {
      case StatKind::kMin:
        values[i] = *std::min_element(p.begin(), p.end());
        break;
      case StatKind::kMax:
        values[i] = *std::max_element(p.begin(), p.end());
        break;
      case StatKind::kMean:
      case StatKind::kStddev: {
        double sum = 0.0;
        for (double v : p) sum += v;
        const double mean = sum / static_cast<double>(p.size());
        if (stat == StatKind::kMean) {
          values[i] = mean;
          break;
        }
        double ss = 0.0;
        for (double v : p) ss += (v - mean) * (v - mean);
        values[i] = std::sqrt(ss / static_cast<double>(p.size()));
        break;
      }
    }
  }
  result.add(stat, variable, GridField(out, variable, std::move(values), std::move(mask)));
  return result;
}

}  // namespace gridstream
