#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fsqkit {

enum class ErrorKind {
    invalid_level_count,
    invalid_input,
    invalid_noise,
    invalid_config,
    shape_error,
    off_lattice,
    out_of_range,
    residual_unsupported,
    decode_error,
    capacity_error,
    invalid_codebook,
    no_data,
    coverage_error,
    parse_error,
    non_invertible_config,
    undefined_reference,
    saturated_measurement,
    unsupported_format,
    resample_required,
    io_error,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure in the library is reported as an Error. Parse errors carry the
// byte offset at which the input stopped making sense.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &message,
          std::optional<std::size_t> offset = std::nullopt);

    ErrorKind kind() const noexcept { return kind_; }
    std::optional<std::size_t> offset() const noexcept { return offset_; }

private:
    ErrorKind kind_;
    std::optional<std::size_t> offset_;
};

}  // namespace fsqkit
