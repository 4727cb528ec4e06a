#ifndef DPCD_IO_H_
#define DPCD_IO_H_

#include <filesystem>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "dpcd/frame.h"
#include "dpcd/optimizer.h"

namespace dpcd {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// ASCII PLY: the vertex element's x/y/z (and nx/ny/nz if all present) are
// read; other properties and elements are skipped.
Frame read_ply(std::istream& in, const std::string& source = "<ply>");
// Whitespace-separated rows of 3 (position) or 6 (position + normal)
// numbers. Blank lines and '#' comments are skipped.
Frame read_xyz(std::istream& in, const std::string& source = "<xyz>");
// Dispatches on extension: .ply, otherwise XYZ text.
Frame read_point_cloud(const std::filesystem::path& path);

// ASCII PLY with 9 significant digits; normals are written when present.
void write_ply(const Frame& frame, std::ostream& out);
void write_point_cloud(const Frame& frame, const std::filesystem::path& path);

// Flat "key = value" text whose keys are the DenoiseConfig field names.
// '#' starts a comment.
void apply_config_value(DenoiseConfig& config, const std::string& key,
                        const std::string& value);
DenoiseConfig parse_config(std::istream& in, DenoiseConfig base = {},
                           const std::string& source = "<config>");
DenoiseConfig read_config(const std::filesystem::path& path, DenoiseConfig base = {});
void write_config(const DenoiseConfig& config, std::ostream& out);

}  // namespace dpcd

#endif  // DPCD_IO_H_
