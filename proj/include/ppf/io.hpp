#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ppf/core.hpp"

namespace ppf::io {

namespace fs = std::filesystem;

// Plain CSV, comma separated, no quoting. Ids may not contain commas or
// surrounding whitespace. Numbers are written in the shortest form that
// reads back to the same double.

// areas.csv: id,lat,lon,known
AreaCatalog read_catalog(const fs::path& path);
void write_catalog(const fs::path& path, const AreaCatalog& catalog);

// n x n matrix with a header row and a first column of area ids. Rows and
// columns may come in any order; the result follows catalog order.
Matrix read_flow_matrix(const fs::path& path, const AreaCatalog& catalog);
void write_flow_matrix(const fs::path& path, const AreaCatalog& catalog, const Matrix& m);

// First column area id, then one column per feature.
View read_view(const fs::path& path, std::string name, const AreaCatalog& catalog);
void write_view(const fs::path& path, const AreaCatalog& catalog, const View& view);

// flows_<period>_<day>.csv with 1-based days.
std::string flow_file_name(Period p, int day);
std::string view_file_name(std::string_view name);

// Reads areas.csv, every flows_<period>_<day>.csv (days must run 1..D
// without gaps) and every view_<name>.csv in name order.
Dataset read_dataset(const fs::path& dir);

// Writes the files read_dataset expects and returns their paths in
// writing order.
std::vector<fs::path> write_dataset(const fs::path& dir, const Dataset& data);

std::string format_number(double v);

}  // namespace ppf::io
