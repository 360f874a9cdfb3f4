#pragma once

#include <string>

#include "doctest.h"
#include "microgan/error.hpp"

namespace microgan::testing {

// Runs fn, requires it to throw Error with the wanted kind, and hands back
// the message so tests can assert on its content.
template <typename F>
std::string error_message(F&& fn, ErrorKind want) {
  try {
    fn();
  } catch (const Error& e) {
    CHECK(e.kind() == want);
    return e.what();
  } catch (...) {
    FAIL("threw something other than microgan::Error");
    return "";
  }
  FAIL("expected an error, none thrown");
  return "";
}

}  // namespace microgan::testing
