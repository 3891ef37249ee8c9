#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace fftrack::cli {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> mode;  // simulate only
};

int verify_model(const Options& opt);
int optimize(const Options& opt);
int gains(const Options& opt);
int simulate(const Options& opt);
int dump_qp(const Options& opt);

}  // namespace fftrack::cli
