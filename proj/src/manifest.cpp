// Copyright 2026 The nvmetro Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nvmetro/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace nvmetro {

namespace {

class Digest {
 public:
  Digest() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256: digest initialisation failed");
    }
  }
  ~Digest() { EVP_MD_CTX_free(ctx_); }
  Digest(const Digest&) = delete;
  Digest& operator=(const Digest&) = delete;

  void update(const char* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_, data, n) != 1) throw std::runtime_error("sha256: update failed");
  }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_, md.data(), &len) != 1) {
      throw std::runtime_error("sha256: finalisation failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) {
      os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    }
    return os.str();
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Digest d;
  d.update(bytes.data(), bytes.size());
  return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("sha256: cannot read " + path.string());
  Digest d;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

std::string tool_version() { return NVMETRO_VERSION; }

void RunManifest::add_output(const std::filesystem::path& dir, const std::string& file) {
  outputs.emplace_back(file, sha256_file(dir / file));
}

void RunManifest::write(const std::filesystem::path& dir) const {
  {
    std::ofstream cfg(dir / "resolved.cfg");
    cfg << "# resolved configuration of a '" << command << "' run\n" << resolved_config;
    if (!cfg) throw std::runtime_error("cannot write " + (dir / "resolved.cfg").string());
  }
  std::ofstream os(dir / "manifest.txt");
  os << std::setprecision(17);
  os << "command = " << command << '\n';
  os << "tool_version = " << tool_version << '\n';
  os << "config_source = " << config_source << '\n';
  os << "seed = " << seed << '\n';
  os << "rng = " << rng_algorithm << '\n';
  os << "threads = " << threads << '\n';
  os << "wall_clock_seconds = " << wall_clock_seconds << '\n';
  os << "resolved_config_sha256 = " << sha256_hex(resolved_config) << '\n';
  os << "\n[outputs]\n";
  for (const auto& [name, digest] : outputs) os << name << " = sha256:" << digest << '\n';
  os << "\n[resolved_config]\n" << resolved_config;
  if (!os) throw std::runtime_error("cannot write " + (dir / "manifest.txt").string());
}

}  // namespace nvmetro
