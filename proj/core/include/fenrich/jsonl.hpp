#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>

namespace fenrich {

// Calls fn(line_number, line) for every non-blank line; line numbers are
// 1-based and count blank lines too. Throws MissingArtifactError if the file
// cannot be opened.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, std::string_view)>& fn);

// Writes to "<target>.tmp" and renames over the target on commit(). An
// uncommitted writer removes its temporary file on destruction.
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(std::filesystem::path target);
  ~AtomicFileWriter();

  AtomicFileWriter(const AtomicFileWriter&) = delete;
  AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;

  std::ostream& stream() { return out_; }
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

void write_file_atomic(const std::filesystem::path& target, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace fenrich
