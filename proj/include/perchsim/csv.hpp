// CSV emission: a header row, then rows with the same column count.
// Numbers use the shortest round-trip decimal form.
#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "perchsim/common.hpp"
#include "perchsim/config.hpp"

namespace perchsim::csv {

using Cell = std::variant<double, std::int64_t, std::string>;

inline std::string render(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) return config::format_number(v);
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
        else return v;
      },
      c);
}

class Writer {
 public:
  Writer(std::ostream& out, std::vector<std::string> header) : out_(out), columns_(header.size()) {
    if (header.empty()) throw Error("CSV needs at least one column");
    write(header);
  }

  void row(const std::vector<Cell>& cells) {
    if (cells.size() != columns_) throw Error("CSV row width does not match the header");
    std::vector<std::string> text;
    text.reserve(cells.size());
    for (const Cell& c : cells) text.push_back(render(c));
    write(text);
  }

 private:
  void write(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i].find_first_of(",\"\n") != std::string::npos) throw Error("CSV field needs quoting: " + fields[i]);
      out_ << (i ? "," : "") << fields[i];
    }
    out_ << '\n';
  }

  std::ostream& out_;
  std::size_t columns_;
};

}  // namespace perchsim::csv
