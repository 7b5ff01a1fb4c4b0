#pragma once

#include <string>
#include <vector>

#include "gridstream/grid.hpp"
#include "gridstream/summaries.hpp"

namespace gridstream {

// One finalized statistic for one variable. Axis names carry the variable
// code so multi-variable dumps never collide on dimension names.
struct ResultEntry {
  StatKind stat;
  std::string variable;
  GridField field;
  std::string lat_axis;
  std::string lon_axis;
};

class ResultTensor {
 public:
  // Replaces an existing (stat, variable) entry.
  void add(StatKind stat, const std::string& variable, GridField field);

  const std::vector<ResultEntry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }
  const ResultEntry* find(StatKind stat, const std::string& variable) const noexcept;
  // Throws VariableAbsentError.
  const GridField& field(StatKind stat, const std::string& variable) const;

 private:
  std::vector<ResultEntry> entries_;
};

std::string lat_axis_name(const std::string& variable);
std::string lon_axis_name(const std::string& variable);

}  // namespace gridstream
