#include <array>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>

#include "app.hpp"
#include "gfflab/gfflab.hpp"
#include "json.hpp"

namespace gfflab::cli {

std::string sha256_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InvalidInput("cannot open " + path);
  EVP_MD_CTX *md = EVP_MD_CTX_new();
  EVP_DigestInit_ex(md, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(md, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest;
  unsigned len = 0;
  EVP_DigestFinal_ex(md, digest.data(), &len);
  EVP_MD_CTX_free(md);
  static const char *hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

void RunManifest::write(const std::string &path, double wall_seconds) const {
  nlohmann::ordered_json j;
  j["tool"] = "gff-lab";
  j["version"] = kVersion;
  j["command"] = command;
  j["seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
  j["threads"] = threads;
  auto files = [](const std::vector<std::string> &paths) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto &p : paths) {
      nlohmann::ordered_json f;
      f["path"] = p;
      try {
        f["sha256"] = sha256_file(p);
      } catch (const InvalidInput &) {
        f["sha256"] = nullptr;
      }
      arr.push_back(f);
    }
    return arr;
  };
  j["inputs"] = files(inputs);
  j["outputs"] = files(outputs);
  j["exit_code"] = exit_code;
  if (!error.empty())
    j["error"] = error;
  j["wall_time_seconds"] = wall_seconds;
  std::ofstream out(path);
  if (!out)
    throw InvalidInput("cannot write manifest " + path);
  out << j.dump(2) << '\n';
}

} // namespace gfflab::cli
