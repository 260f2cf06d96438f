#pragma once

namespace iplite {

// Integer grid coordinate; row 0 is the top (north) row.
struct Cell {
    int row = 0;
    int col = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

}  // namespace iplite
