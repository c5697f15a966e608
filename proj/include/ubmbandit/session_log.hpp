#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <vector>

#include "ubmbandit/click_models.hpp"

namespace ubmbandit {

// Session-log TSV, one session per line:
//   user_id <TAB> item_1,...,item_K <TAB> c_1,...,c_K
// Item ids are integers, clicks are 0/1. Blank lines are skipped.
std::vector<SessionRecord> read_session_log(std::istream& in);
std::vector<SessionRecord> load_session_log(const std::filesystem::path& path);

void write_session_log(std::ostream& out, const std::vector<SessionRecord>& sessions);
void save_session_log(const std::filesystem::path& path, const std::vector<SessionRecord>& sessions);

struct YandexAdapterOptions {
  int max_list_length = 10;
  std::optional<std::set<std::int64_t>> queries;  // keep only these query ids
};

// Converts the Yandex personalized web search challenge log (M/Q/T/C records,
// tab separated) into the session-log TSV: one output line per result page,
// with the page's URL ids as items and per-URL click indicators.
// Returns the number of sessions written.
std::size_t convert_yandex_log(std::istream& in, std::ostream& out,
                               const YandexAdapterOptions& options = {});

}  // namespace ubmbandit
