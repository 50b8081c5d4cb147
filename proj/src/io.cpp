#include "ppf/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <regex>
#include <unordered_map>

#include "ppf/error.hpp"

namespace ppf::io {

namespace {

struct Line {
  int number;
  std::vector<std::string> cells;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<Line> read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Line> lines;
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (trim(raw).empty()) continue;
    Line l{number, {}};
    std::size_t start = 0;
    while (true) {
      const auto comma = raw.find(',', start);
      l.cells.push_back(trim(std::string_view(raw).substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    lines.push_back(std::move(l));
  }
  if (in.bad()) throw IoError("read error on " + path.string());
  if (lines.empty()) throw IoError(path.string() + ": file is empty");
  return lines;
}

[[noreturn]] void fail(const fs::path& path, int line, const std::string& what) {
  throw IoError(path.string() + ":" + std::to_string(line) + ": " + what);
}

double parse_number(const fs::path& path, int line, std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size())
    fail(path, line, "not a number: '" + std::string(s) + "'");
  return v;
}

std::unordered_map<std::string, Eigen::Index> index_of(const AreaCatalog& catalog) {
  std::unordered_map<std::string, Eigen::Index> idx;
  for (std::size_t i = 0; i < catalog.size(); ++i)
    if (!idx.emplace(catalog.ids[i], static_cast<Eigen::Index>(i)).second)
      throw InvalidInput("duplicate area id '" + catalog.ids[i] + "'");
  return idx;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

// Row order for reading a matrix-like file keyed by area id.
std::vector<Eigen::Index> map_ids(const fs::path& path, int line,
                                  const std::vector<std::string>& ids,
                                  const std::unordered_map<std::string, Eigen::Index>& idx) {
  std::vector<Eigen::Index> out;
  std::vector<bool> seen(idx.size(), false);
  for (const auto& id : ids) {
    const auto it = idx.find(id);
    if (it == idx.end()) fail(path, line, "unknown area id '" + id + "'");
    if (seen[static_cast<std::size_t>(it->second)]) fail(path, line, "area id '" + id + "' repeated");
    seen[static_cast<std::size_t>(it->second)] = true;
    out.push_back(it->second);
  }
  if (out.size() != idx.size())
    fail(path, line,
         "expected " + std::to_string(idx.size()) + " areas, found " + std::to_string(out.size()));
  return out;
}

}  // namespace

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, end);
}

AreaCatalog read_catalog(const fs::path& path) {
  const auto lines = read_csv(path);
  const std::vector<std::string> header{"id", "lat", "lon", "known"};
  if (lines.front().cells != header) fail(path, lines.front().number, "header must be id,lat,lon,known");
  AreaCatalog cat;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const Line& l = lines[r];
    if (l.cells.size() != 4) fail(path, l.number, "expected 4 fields");
    if (l.cells[0].empty()) fail(path, l.number, "empty area id");
    cat.ids.push_back(l.cells[0]);
    cat.coords.push_back({parse_number(path, l.number, l.cells[1]),
                          parse_number(path, l.number, l.cells[2])});
    if (l.cells[3] == "1") {
      cat.known.push_back(true);
    } else if (l.cells[3] == "0") {
      cat.known.push_back(false);
    } else {
      fail(path, l.number, "known must be 0 or 1");
    }
  }
  return cat;
}

void write_catalog(const fs::path& path, const AreaCatalog& catalog) {
  auto out = open_out(path);
  out << "id,lat,lon,known\n";
  for (std::size_t i = 0; i < catalog.size(); ++i)
    out << catalog.ids[i] << ',' << format_number(catalog.coords[i].lat_deg) << ','
        << format_number(catalog.coords[i].lon_deg) << ',' << (catalog.known[i] ? 1 : 0) << '\n';
  close_out(out, path);
}

Matrix read_flow_matrix(const fs::path& path, const AreaCatalog& catalog) {
  const auto lines = read_csv(path);
  const auto idx = index_of(catalog);
  const Line& head = lines.front();
  const std::vector<std::string> col_ids(head.cells.begin() + 1, head.cells.end());
  const auto cols = map_ids(path, head.number, col_ids, idx);

  const auto n = static_cast<Eigen::Index>(catalog.size());
  Matrix m(n, n);
  std::vector<std::string> row_ids;
  for (std::size_t r = 1; r < lines.size(); ++r) row_ids.push_back(lines[r].cells.front());
  const auto rows = map_ids(path, lines.size() > 1 ? lines[1].number : head.number, row_ids, idx);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const Line& l = lines[r];
    if (l.cells.size() != head.cells.size())
      fail(path, l.number, "expected " + std::to_string(head.cells.size()) + " fields");
    for (std::size_t c = 1; c < l.cells.size(); ++c)
      m(rows[r - 1], cols[c - 1]) = parse_number(path, l.number, l.cells[c]);
  }
  return m;
}

void write_flow_matrix(const fs::path& path, const AreaCatalog& catalog, const Matrix& m) {
  const auto n = static_cast<Eigen::Index>(catalog.size());
  if (m.rows() != n || m.cols() != n) throw InvalidInput("flow matrix does not match the catalog");
  auto out = open_out(path);
  out << "id";
  for (const auto& id : catalog.ids) out << ',' << id;
  out << '\n';
  for (Eigen::Index i = 0; i < n; ++i) {
    out << catalog.ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) out << ',' << format_number(m(i, j));
    out << '\n';
  }
  close_out(out, path);
}

View read_view(const fs::path& path, std::string name, const AreaCatalog& catalog) {
  const auto lines = read_csv(path);
  const auto idx = index_of(catalog);
  const auto width = lines.front().cells.size();
  if (width < 2) fail(path, lines.front().number, "a view needs at least one feature column");
  std::vector<std::string> row_ids;
  for (std::size_t r = 1; r < lines.size(); ++r) row_ids.push_back(lines[r].cells.front());
  const auto rows = map_ids(path, lines.size() > 1 ? lines[1].number : 1, row_ids, idx);
  View v{std::move(name), Matrix(static_cast<Eigen::Index>(catalog.size()),
                                 static_cast<Eigen::Index>(width - 1))};
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const Line& l = lines[r];
    if (l.cells.size() != width) fail(path, l.number, "expected " + std::to_string(width) + " fields");
    for (std::size_t c = 1; c < width; ++c)
      v.x(rows[r - 1], static_cast<Eigen::Index>(c - 1)) = parse_number(path, l.number, l.cells[c]);
  }
  return v;
}

void write_view(const fs::path& path, const AreaCatalog& catalog, const View& view) {
  if (view.x.rows() != static_cast<Eigen::Index>(catalog.size()))
    throw InvalidInput("view '" + view.name + "' does not match the catalog");
  auto out = open_out(path);
  out << "id";
  for (Eigen::Index c = 0; c < view.x.cols(); ++c) out << ",f" << c + 1;
  out << '\n';
  for (Eigen::Index i = 0; i < view.x.rows(); ++i) {
    out << catalog.ids[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < view.x.cols(); ++c) out << ',' << format_number(view.x(i, c));
    out << '\n';
  }
  close_out(out, path);
}

std::string flow_file_name(Period p, int day) {
  return "flows_" + std::string(to_string(p)) + "_" + std::to_string(day) + ".csv";
}

std::string view_file_name(std::string_view name) { return "view_" + std::string(name) + ".csv"; }

Dataset read_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  Dataset data;
  data.catalog = read_catalog(dir / "areas.csv");

  static const std::regex flow_re(R"(flows_([a-z]+)_([0-9]+)\.csv)");
  static const std::regex view_re(R"(view_(.+)\.csv)");
  std::map<Period, std::map<int, fs::path>> flow_files;
  std::map<std::string, fs::path> view_files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (std::regex_match(name, m, flow_re)) {
      const auto p = parse_period(m[1].str());
      if (!p) throw IoError(entry.path().string() + ": unknown period '" + m[1].str() + "'");
      flow_files[*p][std::stoi(m[2].str())] = entry.path();
    } else if (std::regex_match(name, m, view_re)) {
      view_files[m[1].str()] = entry.path();
    }
  }
  if (flow_files.empty()) throw IoError(dir.string() + ": no flows_<period>_<day>.csv files");

  for (Period p : kAllPeriods) {
    const auto it = flow_files.find(p);
    if (it == flow_files.end()) continue;
    FlowTensor ft;
    ft.period = p;
    int expected = 1;
    for (const auto& [day, path] : it->second) {
      if (day != expected)
        throw IoError(dir.string() + ": " + std::string(to_string(p)) + " days must run 1.." +
                      std::to_string(it->second.size()) + " without gaps");
      ft.days.push_back(read_flow_matrix(path, data.catalog));
      ++expected;
    }
    data.flows.push_back(std::move(ft));
  }
  for (const auto& [name, path] : view_files)
    data.views.views.push_back(read_view(path, name, data.catalog));
  return data;
}

std::vector<fs::path> write_dataset(const fs::path& dir, const Dataset& data) {
  fs::create_directories(dir);
  std::vector<fs::path> written;
  written.push_back(dir / "areas.csv");
  write_catalog(written.back(), data.catalog);
  for (const auto& ft : data.flows)
    for (std::size_t d = 0; d < ft.days.size(); ++d) {
      written.push_back(dir / flow_file_name(ft.period, static_cast<int>(d) + 1));
      write_flow_matrix(written.back(), data.catalog, ft.days[d]);
    }
  for (const auto& v : data.views.views) {
    written.push_back(dir / view_file_name(v.name));
    write_view(written.back(), data.catalog, v);
  }
  return written;
}

}  // namespace ppf::io
