#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace semblur::tools {

struct ReutersOptions {
  std::vector<std::string> topics;  // keep docs with exactly one of these
  int min_words = 50;
};

// Converts Reuters-21578 SGML distribution files (reut2-*.sgm) into the
// JSONL corpus format. Document text is TITLE + BODY; the label is the
// matching topic. Returns the number of documents written.
std::size_t convert_reuters_sgml(const std::vector<std::filesystem::path>& sgm_files,
                                 const std::filesystem::path& output_jsonl,
                                 const ReutersOptions& opts);

}  // namespace semblur::tools
