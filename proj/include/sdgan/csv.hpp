#pragma once
// Minimal CSV emission with deterministic number formatting. Numeric cells
// are rendered with %.17g so any double round-trips exactly through its
// decimal form, and identical runs produce byte-identical files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdgan {

/// Thrown on filesystem/stream failures; mapped to its own process exit code
/// by the CLI.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Shortest exact decimal rendering we use everywhere: 17 significant digits.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  /// Opens the file, writes `# key=value`-style comment lines followed by
  /// the header row.
  CsvWriter(const std::filesystem::path& path,
            const std::vector<std::string>& comments,
            const std::vector<std::string>& header) {
    out_.open(path);
    if (!out_) throw IoError("cannot open for writing: " + path.string());
    for (const auto& c : comments) out_ << "# " << c << "\n";
    write_cells(header);
    path_ = path.string();
  }

  /// One data row; cells are pre-rendered strings (use format_g17 / according
  /// integer formatting at the call site).
  void row(const std::vector<std::string>& cells) {
    write_cells(cells);
    if (!out_) throw IoError("write failed: " + path_);
  }

  void flush() { out_.flush(); }

 private:
  void write_cells(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  std::string path_;
};

}  // namespace sdgan
