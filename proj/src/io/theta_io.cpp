#include "asalpp/io/theta_io.hpp"

#include <bit>
#include <fstream>
#include <nlohmann/json.hpp>

#include "asalpp/core/errors.hpp"
#include "asalpp/core/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "theta files are little-endian; a byte-swapping reader is not implemented");

namespace asalpp {

std::string lenia_config_hash(const LeniaConfig& config) {
  nlohmann::json canon = {
      {"grid_size", config.grid_size},   {"channels", config.channels},
      {"kernel_count", config.kernel_count}, {"dt", config.dt},
      {"init_patch", config.init_patch}, {"rollout_steps", config.rollout_steps}};
  std::uint64_t h = fnv1a64(canon.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_theta(const ThetaVector& theta, const LeniaConfig& config, const std::string& path,
                 const std::string& created_at) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(theta.data()),
            static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(theta.size())));
  if (!out) throw IoError("write failed: " + path);
  out.close();

  nlohmann::json sidecar = {{"config_hash", lenia_config_hash(config)},
                            {"length", theta.size()},
                            {"created_at", created_at}};
  std::ofstream side(path + ".json", std::ios::trunc);
  if (!side) throw IoError("cannot open for writing: " + path + ".json");
  side << sidecar.dump(2) << "\n";
}

ThetaVector read_theta(const std::string& path, Eigen::Index expected) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open: " + path);
  std::streamsize bytes = in.tellg();
  if (bytes < 0 || bytes % static_cast<std::streamsize>(sizeof(float)) != 0)
    throw ConfigError("theta file has invalid size: " + path);
  in.seekg(0);
  Eigen::Index count = bytes / static_cast<std::streamsize>(sizeof(float));
  if (expected >= 0 && count != expected)
    throw ConfigError("theta length mismatch for " + path + ": expected " +
                      std::to_string(expected) + " values, file holds " + std::to_string(count));
  ThetaVector theta(count);
  in.read(reinterpret_cast<char*>(theta.data()), bytes);
  if (!in) throw IoError("read failed: " + path);
  if (!theta.allFinite()) throw ConfigError("theta file holds non-finite values: " + path);
  return theta;
}

}  // namespace asalpp
