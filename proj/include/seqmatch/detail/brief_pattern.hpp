#pragma once

#include <array>
#include <cstdint>

// Generated by tools/gen_brief_pattern.py (seed 20240611). Do not edit.

namespace seqmatch::detail {

struct PointPair {
  std::int8_t x1, y1, x2, y2;
};

inline constexpr std::array<PointPair, 256> kBriefPattern = {{
    {6, 13, 11, -3}, {-5, 12, -9, -2}, {9, 11, -2, -3}, {-13, -6, 9, 8},
    {-4, 6, -10, -12}, {0, -2, 10, -4}, {8, 6, -11, -8}, {-10, -13, -7, -3},
    {-13, -6, -4, -4}, {13, 0, -1, -7}, {13, 1, 6, 8}, {10, 8, -2, 0},
    {13, -6, 9, -12}, {10, 5, -5, -2}, {-5, -1, -6, 13}, {-7, 4, -9, 0},
    {8, -12, 13, 8}, {-1, -13, -3, 13}, {9, 3, -1, -2}, {-10, 8, 0, 9},
    {1, -3, 12, -12}, {-10, 5, 6, -8}, {8, -12, 12, 8}, {8, -4, 9, 11},
    {10, -3, 9, -7}, {3, -13, -3, 13}, {4, -13, -6, -6}, {13, -2, -2, 11},
    {3, 10, 13, 0}, {9, -12, 4, 11}, {-9, -11, 10, -5}, {13, 11, 12, -5},
    {-13, 6, 10, 1}, {-5, 6, 6, -9}, {-11, -6, -3, -2}, {1, 1, -1, -12},
    {-11, -4, -6, -8}, {2, 6, 9, 0}, {-8, -8, -4, 6}, {-12, 10, 13, 4},
    {-12, 9, 1, 12}, {11, 12, 12, -3}, {8, 9, 12, -11}, {-1, -2, 0, -10},
    {9, -4, -13, -2}, {9, -7, -8, -7}, {-3, -9, 0, 11}, {10, 6, -11, -2},
    {6, -3, 0, 12}, {-5, -11, 6, -12}, {0, 5, 2, 4}, {7, 10, -4, -4},
    {12, -6, 0, 9}, {4, -8, -11, -4}, {-4, 3, -6, -8}, {10, 0, -1, -2},
    {8, -7, 11, 0}, {12, 8, 13, 1}, {10, -13, -6, -13}, {-10, 13, -2, 12},
    {5, -9, -3, 6}, {-2, 9, -6, 3}, {1, 0, 3, -13}, {6, -12, 12, 10},
    {13, 6, 12, 4}, {-10, 1, -8, 6}, {-13, -12, 3, -5}, {-12, 13, 0, 7},
    {-4, -7, 12, -13}, {10, 9, 8, 1}, {-4, -8, -8, 12}, {-5, 12, -1, -12},
    {12, 7, -8, 6}, {-10, -13, 11, 13}, {-3, -9, -4, -10}, {4, 13, 11, -3},
    {2, -2, 9, -2}, {11, -5, -2, -7}, {-9, -1, 5, -2}, {8, -8, 6, -5},
    {-13, 2, -3, -1}, {-11, 8, 9, -6}, {7, 11, -1, 10}, {0, -5, 13, -4},
    {-4, -8, 1, 4}, {13, 2, 1, 5}, {13, 12, -2, -3}, {13, 4, 7, 9},
    {6, -4, -13, 13}, {7, 5, -10, -11}, {-13, -8, 13, -13}, {9, 4, 0, 8},
    {-13, 13, -4, -1}, {6, -8, 4, -5}, {9, -4, -11, -8}, {-13, 9, -10, 1},
    {-12, -11, -2, -9}, {-6, 10, 6, 2}, {-3, 10, 12, 6}, {-9, 7, -11, 2},
    {11, -4, 8, -10}, {12, -1, 1, 12}, {9, 3, 12, 4}, {-3, 3, 12, 2},
    {13, -11, 12, 2}, {2, -2, 2, 4}, {-10, 5, 5, 1}, {5, -13, -2, -7},
    {10, 1, -4, 8}, {-3, -2, 9, 3}, {4, -3, -9, 7}, {-8, 1, 1, 4},
    {10, -7, 1, -2}, {-1, -8, 9, -6}, {2, -9, -8, -4}, {9, -13, 8, -7},
    {-9, 10, 3, -12}, {5, 12, 8, 9}, {6, 1, -12, 2}, {10, 10, -13, 7},
    {-10, 10, 10, 11}, {-6, -5, -7, -13}, {8, -1, 2, -11}, {-4, 10, -3, 11},
    {8, 4, 1, -10}, {7, -7, -8, -7}, {-10, 3, 0, -5}, {-2, 5, 3, -7},
    {0, -3, 6, -11}, {-8, 4, -3, 7}, {-9, 4, -10, 7}, {-3, -5, -9, 12},
    {-7, 1, -2, -10}, {13, 3, -12, 13}, {1, 4, -6, 11}, {1, 11, -3, -9},
    {-7, -5, -1, -7}, {12, -9, 11, -12}, {-9, -1, 3, 1}, {-4, 9, 6, 0},
    {-3, -11, -13, -12}, {1, 5, 9, -13}, {-1, 13, 11, 4}, {4, 9, -13, 10},
    {3, 11, 0, 7}, {11, 11, -12, -3}, {-13, 0, -1, -13}, {11, 10, -13, 2},
    {-13, 1, -6, -12}, {-3, -6, 5, -12}, {7, -9, -3, -12}, {9, -7, 1, -5},
    {10, -12, -1, 13}, {-12, 5, -3, -3}, {0, 6, -11, 13}, {-10, -7, 10, 0},
    {10, -10, 11, 8}, {8, -12, 4, 0}, {10, 1, 2, -13}, {-2, -4, 0, -11},
    {-4, -4, -10, 8}, {8, 6, 3, -12}, {-10, -9, -2, 10}, {-7, 11, 3, -8},
    {-3, -2, 9, -10}, {-3, 0, 13, 2}, {-10, -11, -2, 11}, {8, -12, -1, -1},
    {-5, 2, -3, -7}, {-8, 11, -13, 4}, {7, 13, 3, -2}, {0, 2, 9, 10},
    {-7, -8, -4, -10}, {0, 3, 4, -12}, {-2, -7, -12, -2}, {-9, -2, 9, 12},
    {10, -12, 10, 7}, {-6, -12, -2, -11}, {11, 2, 4, 8}, {3, 5, 10, -10},
    {7, -3, 6, -4}, {2, -5, -5, 5}, {-4, 1, 1, -3}, {2, 10, -6, -6},
    {1, 1, 4, -13}, {13, 11, 13, -4}, {-3, -9, 13, -9}, {-4, -7, 1, -13},
    {1, 0, -6, 12}, {-3, 9, 2, -1}, {1, -3, -3, 11}, {-5, 13, -7, 9},
    {6, 0, -1, -10}, {4, 7, 9, 8}, {2, -10, 8, 7}, {-9, 11, -7, -9},
    {-5, -9, 12, 3}, {-4, -3, -5, -9}, {-8, 0, -12, 13}, {12, 3, 5, 2},
    {11, -6, -1, -10}, {7, 6, -3, -13}, {13, -8, 12, -6}, {13, 3, -4, 2},
    {-13, -4, -11, -11}, {-11, 3, -3, 13}, {-11, 3, -2, 7}, {10, 1, 0, -11},
    {7, 9, -6, -3}, {12, 3, -8, 12}, {9, -5, 4, -9}, {0, 9, -11, -12},
    {13, 9, -2, -8}, {-9, 2, -3, -5}, {-4, 11, 8, -6}, {8, -10, -10, 12},
    {-5, 12, 4, -12}, {2, 5, 5, -9}, {-12, -11, 8, -3}, {-13, -3, -9, 2},
    {-4, 2, -3, 3}, {-9, -11, 5, -10}, {13, -10, 4, -8}, {-13, -2, 5, 3},
    {-11, 3, -10, -10}, {-4, 13, 11, -10}, {8, 8, 11, -12}, {6, 11, 7, 0},
    {-3, -8, -10, 2}, {-8, -13, -3, -13}, {6, -2, 6, 1}, {-8, -11, 0, 5},
    {7, -13, -8, -6}, {7, 1, -13, -2}, {0, 6, -13, -9}, {5, 10, -3, -2},
    {-10, -13, -13, 4}, {-8, 5, 8, -9}, {-9, 8, -13, 5}, {4, -7, 11, 12},
    {9, -4, 10, -5}, {-1, -5, -10, -4}, {10, 4, 6, 7}, {5, 4, -4, -5},
    {1, -12, -6, -13}, {13, 11, 4, 5}, {-8, -2, -2, -6}, {3, 4, 13, -3},
    {-6, 10, -3, 3}, {9, 2, 6, -10}, {0, -11, 1, 5}, {-11, 10, 3, 10},
    {-9, -11, -8, -2}, {-3, -4, -7, -5}, {12, -11, -12, -6}, {4, -13, -4, 6},
}};

}  // namespace seqmatch::detail
