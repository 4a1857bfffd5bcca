#pragma once

#include <iosfwd>
#include <string>

#include "stoptime/problems.hpp"
#include "stoptime/types.hpp"

namespace stoptime {

struct LibsvmOptions {
  long force_dim = 0;        // 0: use the largest index seen
  bool add_intercept = true; // append a constant-1 feature column
};

// Text lines `label idx:val idx:val ...` with 1-based ascending indices;
// `#` starts a comment. Labels {0,+1} map to {-1,+1}; {-1,+1} pass through.
// Unset entries are zero.
Dataset parse_libsvm(std::istream& in, const LibsvmOptions& opts = {});
Dataset parse_libsvm_file(const std::string& path, const LibsvmOptions& opts = {});

// Dense serialization to the same text format (every column written).
void write_libsvm(std::ostream& out, const Dataset& dataset);

// Self-describing binary cache: magic "STDZ1", n and d as little-endian
// u64, row-major doubles, then labels as signed bytes.
void write_dataset_blob(const std::string& path, const Dataset& dataset);
Dataset read_dataset_blob(const std::string& path);

// Parameter checkpoint: magic "STTH1", length as little-endian u64, doubles.
void write_theta_blob(const std::string& path, const ParamVector& theta);
ParamVector read_theta_blob(const std::string& path);

}  // namespace stoptime
