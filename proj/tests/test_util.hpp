#pragma once

#include "longgreeks/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>

// Asserts that fn throws longgreeks::Error of the given kind.
#define EXPECT_LG_ERROR(expected_kind_, statement)                                                          \
    do {                                                                                          \
        bool thrown_ = false;                                                                     \
        try {                                                                                     \
            statement;                                                                            \
        } catch (const longgreeks::Error& e_) {                                                   \
            thrown_ = true;                                                                       \
            EXPECT_EQ(e_.kind(), expected_kind_) << e_.what();                                              \
        }                                                                                         \
        EXPECT_TRUE(thrown_) << "expected " << longgreeks::error_kind_name(expected_kind_);                 \
    } while (0)

inline double combined_se(double a, double b) { return std::hypot(a, b); }
