#include <openssl/evp.h>

#include <fstream>
#include <memory>

#include "tic/io.hpp"

namespace tic {

const char* library_version() noexcept { return "1.0.0"; }

std::string sha256_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorKind::config, "cannot read " + p.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::numeric, "sha256 init failed");
  std::vector<char> buf(1 << 16);
  while (f) {
    f.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (f.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(f.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 15];
  }
  return out;
}

void write_manifest(const std::filesystem::path& dir, const std::string& subcommand,
                    const std::vector<std::string>& args, const nlohmann::json& config,
                    std::uint64_t seed, const std::vector<std::string>& files) {
  nlohmann::ordered_json m;
  m["subcommand"] = subcommand;
  m["args"] = args;
  m["config"] = config;
  m["seed"] = seed;
  m["version"] = library_version();
  nlohmann::ordered_json hashes = nlohmann::ordered_json::object();
  for (const auto& f : files) hashes[f] = sha256_file(dir / f);
  m["files"] = hashes;
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw Error(ErrorKind::config, "cannot write manifest in " + dir.string());
  out << m.dump(2) << '\n';
}

}  // namespace tic
