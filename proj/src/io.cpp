#include "bnest/io.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>

#include "bnest/error.hpp"

namespace bnest {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_count(const std::string& s, std::int64_t& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first != last;
}

}  // namespace

std::vector<std::int64_t> read_counts(std::istream& is) {
  std::vector<std::int64_t> out;
  std::string line;
  std::size_t line_no = 0;
  bool seen_data = false;
  bool seen_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    std::string cell = trim(line);
    if (cell.empty() || cell[0] == '#') continue;
    if (const auto comma = cell.find(','); comma != std::string::npos) cell = trim(cell.substr(0, comma));
    std::int64_t v = 0;
    if (!parse_count(cell, v)) {
      const bool looks_like_header = !cell.empty() && std::isalpha(static_cast<unsigned char>(cell[0]));
      if (!seen_data && !seen_header && looks_like_header) {
        seen_header = true;
        continue;
      }
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": '" + cell + "' is not an integer count");
    }
    if (v < 0) throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": negative count " + cell);
    out.push_back(v);
    seen_data = true;
  }
  if (out.empty()) throw Error(ErrorKind::Parse, "no counts found");
  return out;
}

std::vector<std::int64_t> read_counts_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  return read_counts(in);
}

std::vector<std::int64_t> parse_counts(const std::string& text) {
  std::vector<std::int64_t> out;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    std::int64_t v = 0;
    if (!parse_count(token, v)) throw Error(ErrorKind::Parse, "'" + token + "' is not an integer count");
    if (v < 0) throw Error(ErrorKind::Parse, "negative count " + token);
    out.push_back(v);
    token.clear();
  };
  for (char c : text) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      token.push_back(c);
    }
  }
  flush();
  if (out.empty()) throw Error(ErrorKind::Parse, "no counts found");
  return out;
}

void write_posterior_csv(std::ostream& os, const PosteriorN& post) {
  os << "n,prob,log_weight\n";
  os << std::setprecision(17);
  for (std::int64_t i = 0; i < post.size(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    os << post.support_start + i << ',' << post.probs[idx] << ',' << post.log_weights[idx] << '\n';
  }
}

}  // namespace bnest
