#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace caplab::cli {

/// Writes `content` to a sibling temp file and renames it over `target`.
void write_atomically(const std::filesystem::path& target, std::string_view content);

/// Small CSV builder; reals are printed with 17 significant digits.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header);

  Csv& cell(std::string_view text);
  Csv& cell(const char* text) { return cell(std::string_view(text)); }
  Csv& cell(double value);
  Csv& cell(std::uint64_t value);
  Csv& cell(bool value);
  void end_row();

  const std::string& str() const noexcept { return text_; }

 private:
  void separator();

  std::size_t columns_;
  std::size_t in_row_ = 0;
  std::string text_;
};

}  // namespace caplab::cli
