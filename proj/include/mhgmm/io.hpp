#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mhgmm/data.hpp"
#include "mhgmm/gmm.hpp"

namespace mhgmm {

struct CsvOptions {
  bool header = false;
  /// Last column holds integer labels (1-based on disk).
  bool labels = false;
};

/// One observation per row, comma separated. Throws DataError on ragged
/// rows, unparsable numbers or an empty file.
Dataset read_csv(std::istream& in, const CsvOptions& options);
Dataset read_csv_file(const std::string& path, const CsvOptions& options);

/// Writes values (and labels, when present and requested) followed by a
/// `cluster` column with 1-based assignments when `clusters` is non-null.
void write_csv(std::ostream& out, const Dataset& dataset, const CsvOptions& options,
               const Clustering* clusters = nullptr);

/// Reads integer labels from a file: one per line, or the last field of a
/// comma-separated row. Non-numeric lines (headers) are skipped.
std::vector<int> read_label_file(const std::string& path);

}  // namespace mhgmm
