#include "bifrank/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

#include "bifrank/errors.hpp"

namespace bifrank {

const char* to_string(RatingsFormat format) {
  switch (format) {
    case RatingsFormat::Tab100k:
      return "tab100k";
    case RatingsFormat::DoubleColon1M:
      return "doublecolon1m";
    case RatingsFormat::CsvLatest:
      return "csvlatest";
  }
  return "unknown";
}

RatingsFormat ratings_format_from_string(const std::string& name) {
  if (name == "tab100k" || name == "100k") return RatingsFormat::Tab100k;
  if (name == "doublecolon1m" || name == "1m") return RatingsFormat::DoubleColon1M;
  if (name == "csvlatest" || name == "latest") return RatingsFormat::CsvLatest;
  throw ConfigError("unknown ratings format '" + name + "'");
}

namespace {

struct RawRating {
  std::int64_t user;
  std::int64_t item;
  double rating;
};

std::vector<std::string_view> split(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + sep.size();
  }
}

bool parse_int(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_line(std::string_view line, RatingsFormat format, RawRating& out) {
  std::string_view sep = "\t";
  if (format == RatingsFormat::DoubleColon1M) sep = "::";
  if (format == RatingsFormat::CsvLatest) sep = ",";
  const auto fields = split(line, sep);
  if (fields.size() != 4) return false;
  std::int64_t ts = 0;
  if (!parse_int(fields[0], out.user) || !parse_int(fields[1], out.item) ||
      !parse_double(fields[2], out.rating) || !parse_int(fields[3], ts)) {
    return false;
  }
  return out.rating >= 0.5 && out.rating <= 5.0;
}

std::string format_rating(double r) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, r);
  return std::string(buf, ptr);
}

}  // namespace

RatingsDataset parse_movielens(std::istream& in, RatingsFormat format,
                               const std::string& source_name) {
  std::vector<RawRating> raw;
  std::vector<std::size_t> bad_lines;
  std::size_t data_lines = 0;
  std::size_t line_no = 0;
  std::string line;
  bool header_pending = format == RatingsFormat::CsvLatest;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header_pending) {
      header_pending = false;
      if (line.rfind("userId,movieId,rating,timestamp", 0) == 0) continue;
    }
    ++data_lines;
    RawRating r{};
    if (parse_line(line, format, r)) {
      raw.push_back(r);
    } else {
      bad_lines.push_back(line_no);
    }
  }
  if (in.bad()) throw IngestError(source_name + ": read error");
  if (raw.empty()) throw IngestError(source_name + ": no ratings found");
  if (static_cast<double>(bad_lines.size()) >
      kMaxMalformedFraction * static_cast<double>(data_lines)) {
    std::ostringstream msg;
    msg << source_name << ": " << bad_lines.size() << " of " << data_lines
        << " lines are malformed (limit 0.1%); first at lines";
    for (std::size_t i = 0; i < std::min<std::size_t>(bad_lines.size(), 10); ++i) {
      msg << ' ' << bad_lines[i];
    }
    throw IngestError(msg.str());
  }

  RatingsDataset ds;
  ds.source_format = format;
  ds.malformed_lines = bad_lines.size();
  for (const RawRating& r : raw) {
    ds.user_ids.push_back(r.user);
    ds.item_ids.push_back(r.item);
  }
  for (auto* ids : {&ds.user_ids, &ds.item_ids}) {
    std::sort(ids->begin(), ids->end());
    ids->erase(std::unique(ids->begin(), ids->end()), ids->end());
  }
  ds.n_users = ds.user_ids.size();
  ds.n_items = ds.item_ids.size();
  auto dense = [](const std::vector<std::int64_t>& ids, std::int64_t id) {
    return static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };

  // A repeated pair keeps its first position and takes the last rating.
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> position;
  for (const RawRating& r : raw) {
    const Rating e{dense(ds.user_ids, r.user), dense(ds.item_ids, r.item), r.rating};
    const auto [it, inserted] = position.try_emplace({e.user, e.item}, ds.entries.size());
    if (inserted) {
      ds.entries.push_back(e);
    } else {
      ds.entries[it->second].rating = e.rating;
      ++ds.duplicates;
    }
  }
  return ds;
}

RatingsDataset parse_movielens(const std::filesystem::path& path, RatingsFormat format) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open ratings file " + path.string());
  return parse_movielens(in, format, path.string());
}

std::string to_canonical(const RatingsDataset& dataset) {
  std::string out = "userId,movieId,rating,timestamp\n";
  for (const Rating& e : dataset.entries) {
    out += std::to_string(dataset.user_ids.at(e.user));
    out += ',';
    out += std::to_string(dataset.item_ids.at(e.item));
    out += ',';
    out += format_rating(e.rating);
    out += ",0\n";
  }
  return out;
}

void write_id_map(const RatingsDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write id map " + path.string());
  out << "kind,dense,raw\n";
  for (std::size_t i = 0; i < dataset.user_ids.size(); ++i) {
    out << "user," << i << ',' << dataset.user_ids[i] << '\n';
  }
  for (std::size_t i = 0; i < dataset.item_ids.size(); ++i) {
    out << "item," << i << ',' << dataset.item_ids[i] << '\n';
  }
}

std::vector<std::size_t> minibatch(std::size_t population, std::size_t b, RngStream& rng) {
  if (b == 0) throw SamplingError("minibatch: batch size must be positive");
  if (population == 0) throw SamplingError("minibatch: empty entry set");
  std::vector<std::size_t> out(b);
  for (auto& i : out) i = rng.uniform_index(population);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> minibatch(const RatingsDataset& dataset,
                                                           std::size_t b, RngStream& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(b);
  for (std::size_t i : minibatch(dataset.entries.size(), b, rng)) {
    out.emplace_back(dataset.entries[i].user, dataset.entries[i].item);
  }
  return out;
}

}  // namespace bifrank
