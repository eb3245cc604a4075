#include "caplab/cli/artifacts.hpp"

#include <fstream>
#include <system_error>

#include "caplab/error.hpp"
#include "caplab/numerics.hpp"

namespace caplab::cli {

void write_atomically(const std::filesystem::path& target, std::string_view content) {
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::invalid_input, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) fail(ErrorKind::invalid_input, "write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::invalid_input, "cannot move results into '" + target.string() + "'");
  }
}

Csv::Csv(std::vector<std::string> header) : columns_(header.size()) {
  for (const std::string& h : header) cell(h);
  end_row();
}

void Csv::separator() {
  if (in_row_ > 0) text_ += ',';
  ++in_row_;
}

Csv& Csv::cell(std::string_view text) {
  separator();
  if (text.find_first_of(",\"\n") == std::string_view::npos) {
    text_ += text;
    return *this;
  }
  text_ += '"';
  for (char ch : text) {
    if (ch == '"') text_ += '"';
    text_ += ch;
  }
  text_ += '"';
  return *this;
}

Csv& Csv::cell(double value) { return cell(std::string_view(format_real(value))); }

Csv& Csv::cell(std::uint64_t value) { return cell(std::string_view(std::to_string(value))); }

Csv& Csv::cell(bool value) { return cell(std::string_view(value ? "true" : "false")); }

void Csv::end_row() {
  require(in_row_ == columns_, "CSV row has " + std::to_string(in_row_) + " cells, header has " +
                                   std::to_string(columns_));
  text_ += '\n';
  in_row_ = 0;
}

}  // namespace caplab::cli
