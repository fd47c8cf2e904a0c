#include "reuters.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "semblur/error.hpp"

namespace semblur::tools {

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// first <tag>...</tag> inside [from, to)
std::string extract_tag(const std::string& s, const std::string& tag,
                        std::size_t from, std::size_t to) {
  const std::string open = "<" + tag + ">";
  const std::string close = "</" + tag + ">";
  const auto a = s.find(open, from);
  if (a == std::string::npos || a >= to) return {};
  const auto b = s.find(close, a + open.size());
  if (b == std::string::npos || b > to) return {};
  return s.substr(a + open.size(), b - a - open.size());
}

// topics are wrapped as <D>topic</D>
std::vector<std::string> extract_topics(const std::string& topics_block) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto a = topics_block.find("<D>", pos);
    if (a == std::string::npos) break;
    const auto b = topics_block.find("</D>", a);
    if (b == std::string::npos) break;
    out.push_back(topics_block.substr(a + 3, b - a - 3));
    pos = b + 4;
  }
  return out;
}

std::string decode_entities(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '&') {
      if (s.compare(i, 5, "&amp;") == 0) { out += '&'; i += 4; continue; }
      if (s.compare(i, 4, "&lt;") == 0) { out += '<'; i += 3; continue; }
      if (s.compare(i, 4, "&gt;") == 0) { out += '>'; i += 3; continue; }
      if (s.compare(i, 5, "&#13;") == 0) { out += ' '; i += 4; continue; }
      if (s.compare(i, 4, "&#3;") == 0 || s.compare(i, 4, "&#5;") == 0) {
        i += 3;
        continue;
      }
    }
    out += s[i];
  }
  return out;
}

int count_words(const std::string& text) {
  int words = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

std::string attribute(const std::string& open_tag, const std::string& name) {
  const auto a = open_tag.find(name + "=\"");
  if (a == std::string::npos) return {};
  const auto start = a + name.size() + 2;
  const auto b = open_tag.find('"', start);
  if (b == std::string::npos) return {};
  return open_tag.substr(start, b - start);
}

}  // namespace

std::size_t convert_reuters_sgml(
    const std::vector<std::filesystem::path>& sgm_files,
    const std::filesystem::path& output_jsonl, const ReutersOptions& opts) {
  std::ofstream out(output_jsonl);
  if (!out)
    throw Error(ErrorCode::IoError, "cannot open " + output_jsonl.string());

  std::size_t written = 0;
  for (const auto& file : sgm_files) {
    const std::string data = slurp(file);
    std::size_t pos = 0;
    while (true) {
      const auto a = data.find("<REUTERS", pos);
      if (a == std::string::npos) break;
      const auto open_end = data.find('>', a);
      const auto b = data.find("</REUTERS>", a);
      if (open_end == std::string::npos || b == std::string::npos) break;
      pos = b + 10;

      const std::string open_tag = data.substr(a, open_end - a);
      const std::string id = attribute(open_tag, "NEWID");

      const std::string topics_block = extract_tag(data, "TOPICS", a, b);
      const auto topics = extract_topics(topics_block);
      std::string label;
      int matches = 0;
      for (const auto& t : topics)
        if (std::find(opts.topics.begin(), opts.topics.end(), t) !=
            opts.topics.end()) {
          label = t;
          ++matches;
        }
      if (matches != 1) continue;  // ambiguous or out-of-scope documents

      const std::string title = decode_entities(extract_tag(data, "TITLE", a, b));
      const std::string body = decode_entities(extract_tag(data, "BODY", a, b));
      const std::string text = title.empty() ? body : title + " " + body;
      if (count_words(text) < opts.min_words) continue;

      nlohmann::json j;
      j["id"] = id.empty() ? "doc" + std::to_string(written) : id;
      j["text"] = text;
      j["label"] = label;
      out << j.dump() << '\n';
      ++written;
    }
  }
  return written;
}

}  // namespace semblur::tools
