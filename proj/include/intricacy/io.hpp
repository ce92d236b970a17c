#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace intricacy::io {

/// Plain CSV table: one `# units:` comment line, one header row, data rows.
class CsvTable {
public:
    CsvTable(std::string units_note, std::vector<std::string> columns);

    void add_row(const std::vector<double>& values);
    void add_row(const std::vector<std::string>& cells);

    std::string str() const;
    std::size_t rows() const { return rows_.size(); }

private:
    std::string units_;
    std::vector<std::string> columns_;
    std::vector<std::string> rows_;
};

// Shortest round-trip decimal form, so written files are reproducible bytes.
std::string format_double(double v);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

void write_file(const std::filesystem::path& path, std::string_view contents);

} // namespace intricacy::io
