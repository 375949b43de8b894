#pragma once

#include <string>
#include <vector>

namespace brt {

// 17 significant digits, '.' decimal point, locale-independent.
std::string fmt17(double v);

// Comma-separated output with '#'-prefixed comment lines (used to embed the
// run configuration) and a mandatory header row.  All formatting is
// deterministic so repeated runs are byte-identical.
class CsvWriter {
public:
    void comment(const std::string& line);
    void header(const std::vector<std::string>& names);
    void row(const std::vector<std::string>& cells);
    void row_values(const std::vector<double>& values);

    const std::string& str() const { return buf_; }
    void write_file(const std::string& path) const;

private:
    std::string buf_;
    std::size_t columns_ = 0;
};

}  // namespace brt
