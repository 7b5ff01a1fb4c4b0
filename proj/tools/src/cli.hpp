#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace gridstream::cli {

enum ExitCode : int {
  kOk = 0,
  kRuntime = 1,
  kUsage = 2,
  kData = 3,
  kResource = 4,
};

// Entry point shared by main() and the tests. `args` excludes the program
// name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Flat key=value report, in insertion order.
class Report {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
  std::string text() const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  // Throws gridstream::FormatError on lines that are not key=value.
  static Report parse(const std::string& text);
  const std::string* find(const std::string& key) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace gridstream::cli
