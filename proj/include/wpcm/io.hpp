#pragma once

#include <functional>
#include <iosfwd>
#include <string>

namespace wpcm {

/// Writes via a sibling temp file and renames it over `path`, so readers never
/// observe a partially written file. Creates missing parent directories.
void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& writer,
                  bool binary = false);

std::string read_text_file(const std::string& path);

/// Output directory override (environment variable WPCM_OUTPUT_DIR), or `fallback`.
std::string output_dir_or(const std::string& fallback);

}  // namespace wpcm
