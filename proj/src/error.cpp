#include "fne/error.hpp"

namespace fne {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::invalid_argument: return "invalid argument";
    case Errc::dimension_mismatch: return "dimension mismatch";
    case Errc::degenerate_input: return "degenerate input";
    case Errc::non_finite: return "non-finite value";
    case Errc::not_ready: return "tracker not ready";
    case Errc::infeasible: return "infeasible spec";
    case Errc::io: return "i/o error";
    case Errc::bad_magic: return "bad magic";
    case Errc::bad_version: return "unsupported version";
    case Errc::truncated: return "truncated payload";
    case Errc::inconsistent: return "inconsistent header";
    }
    return "unknown";
}

int exit_code_for(Errc code) noexcept {
    switch (code) {
    case Errc::invalid_argument:
    case Errc::dimension_mismatch:
    case Errc::infeasible:
        return 2;
    case Errc::io:
    case Errc::bad_magic:
    case Errc::bad_version:
    case Errc::truncated:
    case Errc::inconsistent:
        return 3;
    case Errc::degenerate_input:
    case Errc::non_finite:
    case Errc::not_ready:
        return 4;
    }
    return 4;
}

} // namespace fne
