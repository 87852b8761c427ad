#pragma once

#include <doctest.h>

#include "lane/error.hpp"

// Runs `expr` and checks it throws lane::Error of the given kind.
#define CHECK_ERROR_KIND(expr, expected_kind)                              \
  do {                                                                     \
    bool thrown_ = false;                                                  \
    try {                                                                  \
      (void)(expr);                                                        \
    } catch (const lane::Error& e_) {                                      \
      thrown_ = true;                                                      \
      CHECK_MESSAGE(e_.kind() == (expected_kind), e_.what());              \
    }                                                                      \
    CHECK_MESSAGE(thrown_, "expected lane::Error from " #expr);            \
  } while (0)
