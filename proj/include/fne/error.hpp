#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fne {

enum class Errc {
    invalid_argument,
    dimension_mismatch,
    degenerate_input,
    non_finite,
    not_ready,
    infeasible,
    io,
    bad_magic,
    bad_version,
    truncated,
    inconsistent,
};

std::string_view errc_name(Errc code) noexcept;

// Process exit code for a CLI failure of this category:
// 2 usage/validation, 3 I/O and file format, 4 numerical.
int exit_code_for(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace fne
