#pragma once

// Plain-text sample input and posterior output.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bnest/core.hpp"

namespace bnest {

/// One count per line, optionally under a non-numeric header line; blank
/// lines and lines starting with '#' are skipped. Errors name the line.
std::vector<std::int64_t> read_counts(std::istream& is);
std::vector<std::int64_t> read_counts_file(const std::string& path);

/// Comma- or whitespace-separated counts, e.g. "1,2,0,3".
std::vector<std::int64_t> parse_counts(const std::string& text);

/// CSV with columns n,prob,log_weight over the stored support.
void write_posterior_csv(std::ostream& os, const PosteriorN& post);

}  // namespace bnest
