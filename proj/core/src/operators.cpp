#include <cmath>

#include "gridstream/errors.hpp"
#include "gridstream/plan.hpp"

namespace gridstream {

namespace {

const std::set<ElementKind> kAnyKind = {ElementKind::kGridTensor, ElementKind::kSummary,
                                        ElementKind::kField};

std::string_view element_variable(const Element& e) {
  if (const auto* s = std::get_if<CellSummaries>(&e)) return s->variable();
  if (const auto* f = std::get_if<GridField>(&e)) return f->variable();
  return {};
}

GridField as_field(const Element& e) {
  if (const auto* f = std::get_if<GridField>(&e)) return *f;
  if (const auto* s = std::get_if<CellSummaries>(&e)) return finalize(*s, StatKind::kMean);
  const auto& t = std::get<GridTensor>(e);
  if (t.fields().size() != 1) throw TypeError("pairwise mean needs single-variable tensors");
  return t.fields().front();
}

// Population variance per cell; empty cells come out masked.
GridField variance_field(const CellSummaries& s) {
  const GridGeometry& g = s.geometry();
  std::vector<double> values(s.size(), 0.0);
  std::vector<std::uint8_t> mask(s.size(), 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.count(i) == 0) continue;
    values[i] = s.m2(i) / static_cast<double>(s.count(i));
    mask[i] = 1;
  }
  return GridField(g, s.variable().empty() ? "value" : s.variable(), std::move(values),
                   std::move(mask));
}

Element merge_elements(const Element& acc, const Element& next) {
  CellSummaries a = to_summary(acc);
  if (const auto* f = std::get_if<GridField>(&next)) return accumulate(a, *f);
  if (const auto* t = std::get_if<GridTensor>(&next); t && t->fields().size() == 1) {
    return accumulate(a, t->fields().front());
  }
  return merge(a, to_summary(next));
}

}  // namespace

OperatorRegistry& OperatorRegistry::global() {
  static OperatorRegistry registry;
  return registry;
}

OperatorRegistry::OperatorRegistry() {
  register_map("identity", {kAnyKind, [](ElementKind k) { return k; },
                            [](const Element& e, std::string_view) { return e; }});

  register_map("select",
               {{ElementKind::kGridTensor}, [](ElementKind) { return ElementKind::kGridTensor; },
                [](const Element& e, std::string_view var) -> Element {
                  return std::get<GridTensor>(e).select(var);
                }});

  register_map("lift-moments", {kAnyKind, [](ElementKind) { return ElementKind::kSummary; },
                                [](const Element& e, std::string_view) -> Element {
                                  return to_summary(e);
                                }});

  register_map("variance",
               {{ElementKind::kSummary}, [](ElementKind) { return ElementKind::kField; },
                [](const Element& e, std::string_view) -> Element {
                  return variance_field(std::get<CellSummaries>(e));
                }});

  register_predicate("always-true", {[](const Element&, std::string_view) { return true; }});

  register_predicate("has-variable", {[](const Element& e, std::string_view var) {
                       if (const auto* t = std::get_if<GridTensor>(&e)) return t->has(var);
                       return element_variable(e) == var;
                     }});

  CombineOperator merge_op;
  merge_op.output = ElementKind::kSummary;
  merge_op.order = CombineOperator::Order::kTree;
  merge_op.identity = [] { return Element(CellSummaries::identity()); };
  merge_op.lift = [](const Element& e) { return Element(to_summary(e)); };
  merge_op.combine = merge_elements;
  register_combine("merge", std::move(merge_op));

  // Not associative: (a + b) / 2 applied strictly in partition order. The
  // declared identity is the empty summary, as a field needs a geometry.
  CombineOperator pairwise;
  pairwise.output = ElementKind::kField;
  pairwise.order = CombineOperator::Order::kLeftFold;
  pairwise.identity = [] { return Element(CellSummaries::identity()); };
  pairwise.lift = [](const Element& e) { return Element(as_field(e)); };
  pairwise.combine = [](const Element& a, const Element& b) -> Element {
    return pairwise_mean(as_field(a), as_field(b));
  };
  register_combine("pairwise-mean", std::move(pairwise));
}

}  // namespace gridstream
