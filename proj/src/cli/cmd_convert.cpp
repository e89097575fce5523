#include <cstdio>
#include <cstring>
#include <regex>
#include <sstream>

#include "commands.hpp"
#include "refinekit/io_util.hpp"

namespace refinekit::cli {

namespace {

struct ConvertArgs {
  std::string input;
  std::string format;
  std::size_t dim = 0;
  std::string dtype = "f32";
  std::string ids;
  std::string out;
  bool header = false;
  bool id_column = false;
};

struct Parsed {
  std::size_t dim = 0;
  std::vector<float> data;
  std::vector<std::string> ids;
};

float parse_float(const std::string& cell, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size()) return static_cast<float>(v);
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::BadFormat, "line " + std::to_string(line) + ": not a number: '" + cell + "'", line);
}

Parsed parse_csv(const ConvertArgs& a) {
  std::istringstream in(io::read_text(a.input));
  Parsed p;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (a.header && line_no == 1)) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    std::size_t start = 0;
    if (a.id_column) {
      if (cells.empty()) throw Error(ErrorCode::BadFormat, "line " + std::to_string(line_no) + " has no id", line_no);
      p.ids.push_back(cells[0]);
      start = 1;
    }
    const std::size_t width = cells.size() - start;
    if (p.dim == 0) p.dim = width;
    if (width != p.dim || width == 0) {
      throw Error(ErrorCode::ShapeMismatch,
                  "line " + std::to_string(line_no) + " has " + std::to_string(width) + " values, expected " +
                      std::to_string(p.dim),
                  line_no);
    }
    for (std::size_t c = start; c < cells.size(); ++c) p.data.push_back(parse_float(cells[c], line_no));
  }
  if (a.dim != 0 && a.dim != p.dim) {
    throw Error(ErrorCode::DimensionMismatch, "--dim " + std::to_string(a.dim) + " but rows have " +
                                                  std::to_string(p.dim) + " values");
  }
  return p;
}

void decode_floats(const std::uint8_t* bytes, std::size_t n, bool f64, std::vector<float>& out) {
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(f64 ? static_cast<float>(io::get_f64(bytes + 8 * i)) : io::get_f32(bytes + 4 * i));
  }
}

Parsed parse_raw(const ConvertArgs& a) {
  if (a.dim == 0) throw Error(ErrorCode::InvalidArgument, "raw input needs --dim");
  if (a.dtype != "f32" && a.dtype != "f64") throw Error(ErrorCode::InvalidArgument, "--dtype must be f32 or f64");
  const bool f64 = a.dtype == "f64";
  const auto bytes = io::read_file(a.input);
  const std::size_t width = f64 ? 8 : 4;
  if (bytes.size() % (width * a.dim) != 0) {
    throw Error(ErrorCode::TruncatedFile, "raw file size " + std::to_string(bytes.size()) +
                                              " is not a multiple of dim·" + std::to_string(width));
  }
  Parsed p;
  p.dim = a.dim;
  decode_floats(bytes.data(), bytes.size() / width, f64, p.data);
  return p;
}

// NPY v1/v2/v3 with a little-endian float32 or float64 C-order 1-D or 2-D array.
Parsed parse_npy(const ConvertArgs& a) {
  const auto bytes = io::read_file(a.input);
  static const std::uint8_t magic[] = {0x93, 'N', 'U', 'M', 'P', 'Y'};
  if (bytes.size() < 10 || std::memcmp(bytes.data(), magic, 6) != 0) {
    throw Error(ErrorCode::BadMagic, "not an NPY file: " + a.input, 0);
  }
  const int major = bytes[6];
  std::size_t header_len = 0;
  std::size_t offset = 0;
  if (major == 1) {
    header_len = bytes[8] | (bytes[9] << 8);
    offset = 10;
  } else {
    if (bytes.size() < 12) throw Error(ErrorCode::TruncatedFile, "NPY header truncated", bytes.size());
    header_len = io::get_u32(bytes.data() + 8);
    offset = 12;
  }
  if (offset + header_len > bytes.size()) throw Error(ErrorCode::TruncatedFile, "NPY header truncated", bytes.size());
  const std::string header(bytes.begin() + offset, bytes.begin() + offset + header_len);
  offset += header_len;

  std::smatch m;
  if (!std::regex_search(header, m, std::regex(R"('descr'\s*:\s*'([^']*)')"))) {
    throw Error(ErrorCode::BadFormat, "NPY header lacks descr");
  }
  const std::string descr = m[1];
  if (descr != "<f4" && descr != "<f8") throw Error(ErrorCode::BadFormat, "unsupported NPY dtype " + descr);
  if (std::regex_search(header, std::regex(R"('fortran_order'\s*:\s*True)"))) {
    throw Error(ErrorCode::BadFormat, "Fortran-ordered NPY arrays are not supported");
  }
  if (!std::regex_search(header, m, std::regex(R"('shape'\s*:\s*\(([^)]*)\))"))) {
    throw Error(ErrorCode::BadFormat, "NPY header lacks shape");
  }
  std::vector<std::size_t> shape;
  for (const auto& s : split(m[1], ',')) shape.push_back(std::stoull(s));
  std::size_t rows = 0, dim = 0;
  if (shape.size() == 2) {
    rows = shape[0];
    dim = shape[1];
  } else if (shape.size() == 1 && a.dim != 0 && shape[0] % a.dim == 0) {
    rows = shape[0] / a.dim;
    dim = a.dim;
  } else {
    throw Error(ErrorCode::ShapeMismatch, "NPY array must be 2-D (or 1-D with --dim)");
  }
  if (a.dim != 0 && a.dim != dim) throw Error(ErrorCode::DimensionMismatch, "--dim disagrees with NPY shape");
  const bool f64 = descr == "<f8";
  const std::size_t need = rows * dim * (f64 ? 8 : 4);
  if (bytes.size() - offset < need) throw Error(ErrorCode::TruncatedFile, "NPY data truncated", bytes.size());
  Parsed p;
  p.dim = dim;
  decode_floats(bytes.data() + offset, rows * dim, f64, p.data);
  return p;
}

std::vector<std::string> read_ids(const std::string& path) {
  std::istringstream in(io::read_text(path));
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

int run_convert(const ConvertArgs& a, Streams st) {
  Parsed p;
  if (a.format == "csv") {
    p = parse_csv(a);
  } else if (a.format == "raw") {
    p = parse_raw(a);
  } else {
    p = parse_npy(a);
  }
  if (p.dim == 0 || p.data.empty()) throw Error(ErrorCode::EmptySet, "no embeddings in " + a.input);
  const std::size_t rows = p.data.size() / p.dim;
  if (!a.ids.empty()) {
    if (!p.ids.empty()) throw Error(ErrorCode::InvalidArgument, "--ids conflicts with --id-column");
    p.ids = read_ids(a.ids);
  }
  if (p.ids.empty()) {
    for (std::size_t i = 0; i < rows; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "row_%06zu", i);
      p.ids.emplace_back(buf);
    }
  }
  if (p.ids.size() != rows) {
    throw Error(ErrorCode::ShapeMismatch,
                std::to_string(p.ids.size()) + " ids for " + std::to_string(rows) + " embedding rows");
  }
  const EmbeddingTable table(p.dim, std::move(p.data), std::move(p.ids));
  save_table(table, a.out);
  nlohmann::ordered_json j{{"out", a.out}, {"count", table.count()}, {"dim", table.dim()}};
  st.out << j.dump() << "\n";
  return 0;
}

}  // namespace

Action add_convert(CLI::App& app, Streams st) {
  auto a = std::make_shared<ConvertArgs>();
  auto* sub = app.add_subcommand("convert", "Convert flat float dumps into an EMB1 table");
  sub->add_option("--input", a->input, "Source file")->required();
  sub->add_option("--format", a->format, "csv, raw or npy")->required()->check(CLI::IsMember({"csv", "raw", "npy"}));
  sub->add_option("--dim", a->dim, "Embedding dimension (required for raw)");
  sub->add_option("--dtype", a->dtype, "raw element type: f32 or f64")->capture_default_str();
  sub->add_option("--ids", a->ids, "File with one id per line (default row_000000, ...)");
  sub->add_flag("--header", a->header, "CSV: skip the first line");
  sub->add_flag("--id-column", a->id_column, "CSV: first column holds the id");
  sub->add_option("--out", a->out, "EMB1 output path")->required();
  return [a, st] { return run_convert(*a, st); };
}

}  // namespace refinekit::cli
