#pragma once

#include <string>

#include "asalpp/substrate/lenia.hpp"

namespace asalpp {

/// Hash of the canonical substrate-config JSON; stored in theta sidecars so
/// a loaded theta can be checked against the config it was created under.
std::string lenia_config_hash(const LeniaConfig& config);

/// Writes theta as raw little-endian IEEE-754 32-bit values at `path`, plus
/// a `{path}.json` sidecar {"config_hash", "length", "created_at"}.
void write_theta(const ThetaVector& theta, const LeniaConfig& config, const std::string& path,
                 const std::string& created_at);

/// Reads a raw float32 theta file. When `expected` is non-negative the
/// length is validated and a mismatch raises ConfigError naming both sizes.
ThetaVector read_theta(const std::string& path, Eigen::Index expected = -1);

}  // namespace asalpp
