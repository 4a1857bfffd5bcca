#include "stoptime/datasets.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace stoptime {

namespace {

double parse_number(const std::string& token, long line_no, const char* what) {
  std::size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &consumed);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": non-numeric " + what + " '" +
                         token + "'",
                     line_no);
  }
  if (consumed != token.size())
    throw ParseError("line " + std::to_string(line_no) + ": non-numeric " + what + " '" +
                         token + "'",
                     line_no);
  return value;
}

double normalize_label(double raw, long line_no) {
  if (raw == 1.0 || raw == -1.0) return raw;
  if (raw == 0.0) return -1.0;
  throw ParseError("line " + std::to_string(line_no) + ": label must be -1, 0, or +1",
                   line_no);
}

}  // namespace

Dataset parse_libsvm(std::istream& in, const LibsvmOptions& opts) {
  std::vector<double> labels;
  std::vector<std::vector<std::pair<long, double>>> rows;
  long max_index = 0;
  long line_no = 0;

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;  // blank or comment-only line

    labels.push_back(normalize_label(parse_number(token, line_no, "label"), line_no));
    rows.emplace_back();
    long prev_index = 0;
    while (fields >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos)
        throw ParseError("line " + std::to_string(line_no) + ": expected idx:val, got '" +
                             token + "'",
                         line_no);
      const double idx_raw = parse_number(token.substr(0, colon), line_no, "index");
      const long idx = static_cast<long>(idx_raw);
      if (idx_raw != static_cast<double>(idx) || idx < 1)
        throw ParseError("line " + std::to_string(line_no) + ": index must be a positive integer",
                         line_no);
      if (idx <= prev_index)
        throw ParseError("line " + std::to_string(line_no) + ": indices must be ascending",
                         line_no);
      const double val = parse_number(token.substr(colon + 1), line_no, "value");
      rows.back().emplace_back(idx, val);
      prev_index = idx;
      max_index = std::max(max_index, idx);
    }
  }

  if (labels.empty()) throw ParseError("empty dataset", line_no);

  const long d = opts.force_dim > 0 ? opts.force_dim : max_index;
  const long n = static_cast<long>(labels.size());
  const long cols = d + (opts.add_intercept ? 1 : 0);

  Dataset out;
  out.features = Matrix::Zero(n, cols);
  out.labels.resize(n);
  for (long i = 0; i < n; ++i) {
    out.labels[i] = labels[static_cast<std::size_t>(i)];
    for (const auto& [idx, val] : rows[static_cast<std::size_t>(i)])
      if (idx <= d) out.features(i, idx - 1) = val;
    if (opts.add_intercept) out.features(i, d) = 1.0;
  }
  return out;
}

Dataset parse_libsvm_file(const std::string& path, const LibsvmOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);
  return parse_libsvm(in, opts);
}

void write_libsvm(std::ostream& out, const Dataset& dataset) {
  char buf[64];
  for (long i = 0; i < dataset.n(); ++i) {
    out << (dataset.labels[i] > 0 ? "+1" : "-1");
    for (long j = 0; j < dataset.d(); ++j) {
      std::snprintf(buf, sizeof(buf), " %ld:%.17g", j + 1, dataset.features(i, j));
      out << buf;
    }
    out << '\n';
  }
}

namespace {

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw IoError("truncated blob");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void check_magic(std::istream& in, const char* magic) {
  char got[5];
  in.read(got, 5);
  if (!in || std::string(got, 5) != magic) throw IoError(std::string("bad blob magic, want ") + magic);
}

}  // namespace

void write_dataset_blob(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write("STDZ1", 5);
  write_u64(out, static_cast<std::uint64_t>(dataset.n()));
  write_u64(out, static_cast<std::uint64_t>(dataset.d()));
  for (long i = 0; i < dataset.n(); ++i)
    out.write(reinterpret_cast<const char*>(dataset.features.row(i).eval().data()),
              static_cast<std::streamsize>(sizeof(double)) * dataset.d());
  for (long i = 0; i < dataset.n(); ++i) {
    const signed char y = dataset.labels[i] > 0 ? 1 : -1;
    out.write(reinterpret_cast<const char*>(&y), 1);
  }
  if (!out) throw IoError("write failed: " + path);
}

Dataset read_dataset_blob(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset blob: " + path);
  check_magic(in, "STDZ1");
  const long n = static_cast<long>(read_u64(in));
  const long d = static_cast<long>(read_u64(in));
  Dataset out;
  out.features.resize(n, d);
  std::vector<double> row(static_cast<std::size_t>(d));
  for (long i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(sizeof(double)) * d);
    if (!in) throw IoError("truncated dataset blob: " + path);
    for (long j = 0; j < d; ++j) out.features(i, j) = row[static_cast<std::size_t>(j)];
  }
  out.labels.resize(n);
  for (long i = 0; i < n; ++i) {
    signed char y = 0;
    in.read(reinterpret_cast<char*>(&y), 1);
    if (!in) throw IoError("truncated dataset blob: " + path);
    out.labels[i] = y >= 0 ? 1.0 : -1.0;
  }
  return out;
}

void write_theta_blob(const std::string& path, const ParamVector& theta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write("STTH1", 5);
  write_u64(out, static_cast<std::uint64_t>(theta.size()));
  out.write(reinterpret_cast<const char*>(theta.data()),
            static_cast<std::streamsize>(sizeof(double)) * theta.size());
  if (!out) throw IoError("write failed: " + path);
}

ParamVector read_theta_blob(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  check_magic(in, "STTH1");
  const long p = static_cast<long>(read_u64(in));
  ParamVector theta(p);
  in.read(reinterpret_cast<char*>(theta.data()),
          static_cast<std::streamsize>(sizeof(double)) * p);
  if (!in) throw IoError("truncated checkpoint: " + path);
  return theta;
}

}  // namespace stoptime
