#include "gridstream/filename.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "gridstream/errors.hpp"

namespace gridstream {
namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int to_int(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

}  // namespace

bool is_known_variable(std::string_view code) noexcept {
  return std::find(std::begin(kKnownVariables), std::end(kKnownVariables), code) !=
         std::end(kKnownVariables);
}

std::int64_t parse_cycle(std::string_view s) {
  if (s.size() != 10 || !all_digits(s)) {
    throw FilenameError("cycle", "expected YYYYMMDDHH, got '" + std::string(s) + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{to_int(s.substr(0, 4))},
                           month{static_cast<unsigned>(to_int(s.substr(4, 2)))},
                           day{static_cast<unsigned>(to_int(s.substr(6, 2)))}};
  const int hour = to_int(s.substr(8, 2));
  if (!ymd.ok() || hour > 23) {
    throw FilenameError("cycle", "not a calendar date/hour: '" + std::string(s) + "'");
  }
  const auto t = sys_days{ymd} + hours{hour};
  return duration_cast<seconds>(t.time_since_epoch()).count();
}

std::string format_cycle(std::int64_t unix_seconds) {
  using namespace std::chrono;
  const sys_seconds t{seconds{unix_seconds}};
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const auto hour = duration_cast<hours>(t - day_start).count();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d%02u%02u%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hour));
  return buf;
}

FileMeta parse_filename(std::string_view name) {
  if (auto slash = name.find_last_of('/'); slash != std::string_view::npos) {
    name.remove_prefix(slash + 1);
  }
  constexpr std::string_view kPrefix = "navgem_";
  constexpr std::string_view kExt = ".sgf";
  if (name.substr(0, kPrefix.size()) != kPrefix) {
    throw FilenameError("prefix", "expected 'navgem_' in '" + std::string(name) + "'");
  }
  if (name.size() < kExt.size() || name.substr(name.size() - kExt.size()) != kExt) {
    throw FilenameError("extension", "expected '.sgf' in '" + std::string(name) + "'");
  }
  std::string_view rest = name.substr(kPrefix.size(), name.size() - kPrefix.size() - kExt.size());

  FileMeta meta;
  const auto u1 = rest.find('_');
  if (u1 == std::string_view::npos) throw FilenameError("cycle", "missing '_' after cycle");
  meta.cycle = parse_cycle(rest.substr(0, u1));
  rest.remove_prefix(u1 + 1);

  const auto u2 = rest.find('_');
  if (u2 == std::string_view::npos) throw FilenameError("tau", "missing '_' after tau");
  const std::string_view tau = rest.substr(0, u2);
  if (tau.size() != 4 || tau[0] != 't' || !all_digits(tau.substr(1))) {
    throw FilenameError("tau", "expected t<TTT>, got '" + std::string(tau) + "'");
  }
  meta.tau = to_int(tau.substr(1));
  rest.remove_prefix(u2 + 1);

  if (rest.empty()) throw FilenameError("variables", "no variable listed");
  while (true) {
    const auto dash = rest.find('-');
    const std::string_view var = rest.substr(0, dash);
    if (!is_known_variable(var)) {
      throw FilenameError("variables", "unknown variable '" + std::string(var) + "'");
    }
    if (std::find(meta.variables.begin(), meta.variables.end(), var) != meta.variables.end()) {
      throw FilenameError("variables", "variable '" + std::string(var) + "' listed twice");
    }
    meta.variables.emplace_back(var);
    if (dash == std::string_view::npos) break;
    rest.remove_prefix(dash + 1);
  }
  return meta;
}

std::string format_filename(const FileMeta& meta) {
  if (meta.tau < 0 || meta.tau > 999) {
    throw FilenameError("tau", "out of range: " + std::to_string(meta.tau));
  }
  if (meta.variables.empty()) throw FilenameError("variables", "no variable listed");
  char tau[8];
  std::snprintf(tau, sizeof tau, "t%03d", meta.tau);
  std::string out = "navgem_" + format_cycle(meta.cycle) + "_" + tau + "_";
  for (std::size_t i = 0; i < meta.variables.size(); ++i) {
    if (!is_known_variable(meta.variables[i])) {
      throw FilenameError("variables", "unknown variable '" + meta.variables[i] + "'");
    }
    if (i) out += '-';
    out += meta.variables[i];
  }
  return out + ".sgf";
}

}  // namespace gridstream
