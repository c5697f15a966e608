#include "ubmbandit/session_log.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ubmbandit {
namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::int64_t parse_int(std::string_view s, std::size_t line) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error("line " + std::to_string(line) + ": '" + std::string(s) +
                             "' is not an integer");
  }
  return v;
}

}  // namespace

std::vector<SessionRecord> read_session_log(std::istream& in) {
  std::vector<SessionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
    }
    SessionRecord rec;
    rec.user = std::string(fields[0]);
    for (auto item : split(fields[1], ',')) rec.displayed.push_back(parse_int(item, line_no));
    for (auto c : split(fields[2], ',')) {
      rec.clicks.push_back(static_cast<int>(parse_int(c, line_no)));
    }
    try {
      validate_session(rec);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<SessionRecord> load_session_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_session_log(in);
}

void write_session_log(std::ostream& out, const std::vector<SessionRecord>& sessions) {
  for (const auto& s : sessions) {
    out << s.user << '\t';
    for (std::size_t i = 0; i < s.displayed.size(); ++i) {
      out << (i ? "," : "") << s.displayed[i];
    }
    out << '\t';
    for (std::size_t i = 0; i < s.clicks.size(); ++i) out << (i ? "," : "") << s.clicks[i];
    out << '\n';
  }
}

void save_session_log(const std::filesystem::path& path,
                      const std::vector<SessionRecord>& sessions) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_session_log(out, sessions);
}

std::size_t convert_yandex_log(std::istream& in, std::ostream& out,
                               const YandexAdapterOptions& options) {
  struct Page {
    std::vector<ArmId> urls;
    ClickVector clicks;
    bool keep = true;
  };
  std::string session_id;
  std::string user;
  std::map<std::int64_t, Page> pages;  // keyed by SERP id, emitted in order
  std::size_t written = 0;

  auto flush = [&]() {
    for (auto& [serp, page] : pages) {
      if (!page.keep || page.urls.empty()) continue;
      SessionRecord rec{user, page.urls, {}, page.clicks};
      write_session_log(out, {rec});
      ++written;
    }
    pages.clear();
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() < 3) throw std::runtime_error("yandex line " + std::to_string(line_no) + ": too few fields");
    if (f[0] != session_id) {
      flush();
      session_id = std::string(f[0]);
      user.clear();
    }
    if (f[1] == "M") {
      if (f.size() < 4) throw std::runtime_error("yandex line " + std::to_string(line_no) + ": bad metadata");
      user = std::string(f[3]);
    } else if (f.size() >= 7 && (f[2] == "Q" || f[2] == "T")) {
      Page page;
      const auto query = parse_int(f[4], line_no);
      page.keep = !options.queries || options.queries->count(query) > 0;
      for (std::size_t i = 6; i < f.size(); ++i) {
        if (static_cast<int>(page.urls.size()) >= options.max_list_length) break;
        const auto url = split(f[i], ',');
        page.urls.push_back(parse_int(url[0], line_no));
      }
      page.clicks.assign(page.urls.size(), 0);
      pages[parse_int(f[3], line_no)] = std::move(page);
    } else if (f.size() >= 5 && f[2] == "C") {
      auto it = pages.find(parse_int(f[3], line_no));
      if (it == pages.end()) continue;
      const auto url = parse_int(f[4], line_no);
      auto& page = it->second;
      for (std::size_t i = 0; i < page.urls.size(); ++i) {
        if (page.urls[i] == url) page.clicks[i] = 1;
      }
    } else {
      throw std::runtime_error("yandex line " + std::to_string(line_no) + ": unknown record type");
    }
  }
  flush();
  return written;
}

}  // namespace ubmbandit
