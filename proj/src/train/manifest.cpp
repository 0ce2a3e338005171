#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "bitwave/error.hpp"
#include "bitwave/train.hpp"

namespace bitwave::train {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

}  // namespace

const char* to_string(Split split) { return split == Split::train ? "train" : "test"; }

std::size_t Manifest::label_index(const std::string& label) const {
  const auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label) throw Error(ErrorKind::data, "label '" + label + "' not in vocabulary");
  return static_cast<std::size_t>(it - labels.begin());
}

std::size_t Manifest::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const ManifestEntry& e) { return e.split == split; }));
}

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  Manifest m;
  std::set<std::string> seen;
  std::set<std::string> labels;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split_csv(t);
    if (m.entries.empty() && seen.empty() && fields.size() == 3 && fields[0] == "path" && fields[1] == "label" &&
        fields[2] == "split")
      continue;
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty())
      throw Error(ErrorKind::data, "manifest line " + std::to_string(line_no) + ": expected path,label,split");
    ManifestEntry e;
    e.path = std::filesystem::path(fields[0]);
    if (e.path.is_relative() && !base_dir.empty()) e.path = base_dir / e.path;
    e.path = e.path.lexically_normal();
    e.label = fields[1];
    if (fields[2] == "train")
      e.split = Split::train;
    else if (fields[2] == "test")
      e.split = Split::test;
    else
      throw Error(ErrorKind::data, "manifest line " + std::to_string(line_no) + ": unknown split '" + fields[2] + "'");
    if (!seen.insert(e.path.string()).second)
      throw Error(ErrorKind::data, "manifest line " + std::to_string(line_no) + ": duplicate path '" +
                                       e.path.string() + "'");
    labels.insert(e.label);
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw Error(ErrorKind::data, "manifest has no entries");
  m.labels.assign(labels.begin(), labels.end());
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_parse, "cannot open manifest '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.parent_path());
}

}  // namespace bitwave::train
