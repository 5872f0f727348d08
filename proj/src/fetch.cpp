#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <openssl/evp.h>
#include <sstream>

#include "s2p/data.hpp"
#include "s2p/errors.hpp"

namespace s2p {

namespace fs = std::filesystem;

namespace {

const std::map<std::string, std::string> kKnownDatasets = {
    {"ETTh1", "https://raw.githubusercontent.com/zhouhaoyi/ETDataset/main/ETT-small/ETTh1.csv"},
    {"ETTh2", "https://raw.githubusercontent.com/zhouhaoyi/ETDataset/main/ETT-small/ETTh2.csv"},
};

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string s = ss.str();
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

// Splits "https://host/path" into scheme://host and /path for httplib.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("url '" + url + "' has no scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FetchError("cannot open '" + path + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string fetch_dataset(const std::string& name, const std::string& url,
                          const std::string& cache_dir) {
  std::string resolved_url = url;
  if (resolved_url.empty()) {
    const auto it = kKnownDatasets.find(name);
    if (it == kKnownDatasets.end()) {
      throw ConfigError("unknown dataset '" + name + "' and no url given");
    }
    resolved_url = it->second;
  }

  fs::create_directories(cache_dir);
  const fs::path csv_path = fs::path(cache_dir) / (name + ".csv");
  const fs::path sum_path = fs::path(cache_dir) / (name + ".sha256");

  if (fs::exists(csv_path)) {
    const std::string actual = sha256_file(csv_path.string());
    if (fs::exists(sum_path)) {
      const std::string recorded = read_text_file(sum_path);
      if (recorded != actual) {
        throw IntegrityError("checksum mismatch for '" + csv_path.string() + "': recorded " +
                             recorded + ", actual " + actual);
      }
    } else {
      std::ofstream(sum_path) << actual << '\n';
    }
    return csv_path.string();
  }

  auto [host, path] = split_url(resolved_url);
  httplib::Client client(host);
  client.set_follow_location(true);
  client.set_connection_timeout(20);
  client.set_read_timeout(60);
  auto res = client.Get(path);
  if (!res || res->status != 200) {
    throw FetchError("download of '" + resolved_url + "' failed (" +
                     (res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error())) +
                     ") and no cached copy exists");
  }
  {
    std::ofstream out(csv_path, std::ios::binary);
    out.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
    if (!out) throw FetchError("cannot write cache file '" + csv_path.string() + "'");
  }
  std::ofstream(sum_path) << sha256_file(csv_path.string()) << '\n';
  return csv_path.string();
}

}  // namespace s2p
