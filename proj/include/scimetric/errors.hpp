#pragma once

#include <stdexcept>
#include <string>

namespace scimetric {

/// Malformed input syntax (JSON/CSV/TSV). Message carries the file/record locus.
class ParseError : public std::runtime_error {
public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// A corpus invariant was violated. Message names the offending researcher/publication.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A computation could not proceed (degenerate input, missing benchmark, non-convergence).
class ComputeError : public std::runtime_error {
public:
  explicit ComputeError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem failure. Message carries the path.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace scimetric
