#include "openem/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "openem/common.hpp"

namespace openem {

std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose, double k) {
  std::string label(purpose);
  label += "@k=";
  label += format_ratio(k);
  return derive_seed(root, label);
}

std::string format_ratio(double k) {
  char buf[64];
  if (std::isfinite(k) && k == std::floor(k) && std::fabs(k) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%.0f", k);
    return buf;
  }
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, k);
    if (std::strtod(buf, nullptr) == k) break;
  }
  return buf;
}

std::size_t round_half_up(double x) {
  if (!(x > 0.0)) return 0;
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ValidationError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<Json> parse_jsonl(std::string_view text, std::string_view source) {
  std::vector<Json> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ValidationError(std::string(source) + ":" + std::to_string(line_no) +
                            ": malformed JSON object");
    }
    rows.push_back(std::move(j));
  }
  return rows;
}

std::string dump_pretty(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace openem
