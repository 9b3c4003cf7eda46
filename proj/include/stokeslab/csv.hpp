#pragma once
// Deterministic plain-text output helpers: locale-independent shortest
// round-trip number formatting, comma-separated rows with LF endings, and
// atomic whole-file writes (temp file + rename) so a reader never observes a
// partially written table.

#include <string>
#include <vector>

namespace stokeslab {

// Shortest decimal string that parses back to exactly the same binary64
// value. Always uses '.' as the decimal separator, independent of locale.
std::string format_number(double value);
std::string format_number(long long value);

// One CSV row: fields joined by commas, terminated by '\n'. Fields are
// emitted verbatim; callers keep commas and newlines out of them.
std::string csv_row(const std::vector<std::string>& fields);

// Writes content to a temp file next to the target, then renames it over the
// target, so the file at `path` is either the old or the new version.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace stokeslab
