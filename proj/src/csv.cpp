#include "qledger/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace qledger {

std::string g17(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void csv_comment(std::ostream& out, const std::string& text) {
    out << "# " << text << '\n';
}

void csv_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].find(',') != std::string::npos)
            throw std::invalid_argument("csv cell contains a comma: " + cells[i]);
        if (i) out << ',';
        out << cells[i];
    }
    out << '\n';
}

}  // namespace qledger
