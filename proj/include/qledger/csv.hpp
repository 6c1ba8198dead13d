#pragma once

// Minimal CSV emission helpers shared by the command-line tools. All floating
// point fields are written with %.17g so runs are reproducible bit-for-bit.

#include <ostream>
#include <string>
#include <vector>

namespace qledger {

// shortest decimal string that round-trips the double
std::string g17(double value);

// "# <text>\n"
void csv_comment(std::ostream& out, const std::string& text);

// comma-joined cells terminated by '\n'; cells must not contain commas
void csv_row(std::ostream& out, const std::vector<std::string>& cells);

}  // namespace qledger
